from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StationaryDistribution:
    """Probability vector over nodes (``support="node"``) or directed edges."""

    values: np.ndarray
    support: str = "node"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("distribution must be one-dimensional")
        if np.any(v < 0):
            raise ValueError("negative probability")
        if abs(v.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {v.sum()!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def normalized(cls, weights, support="node"):
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum(), support)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def tv(self, other) -> float:
        """Total-variation distance to another distribution on the same support."""
        return 0.5 * float(np.abs(self.values - np.asarray(other, dtype=float)).sum())

    def max_abs_diff(self, other) -> float:
        return float(np.max(np.abs(self.values - np.asarray(other, dtype=float))))


def tv_distance(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p, float) - np.asarray(q, float)).sum())
