"""node2vec walks as Markov chains on directed edges.

The reference path (``transition_weights``/``step``) is plain numpy; the
bulk paths (``run_walk``, ``sample_next``, ``sample_sojourn``) run in numba
kernels that draw from the same ``numpy.random.Generator`` and apply the
same inverse-CDF rule, so for a given seed both paths visit the same states.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numba
import numpy as np

from .distribution import StationaryDistribution
from .errors import DeadEnd, DegenerateParams
from .graphs import CommunityTemplate, Graph, HouseholdGraph, community_gadget


@dataclass(frozen=True)
class Node2vecParams:
    """Unnormalised weights for backtrack (alpha), triangle move (beta), other (gamma)."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            x = float(getattr(self, name))
            if not math.isfinite(x) or x < 0:
                raise DegenerateParams(f"{name} must be finite and >= 0, got {x}")
            object.__setattr__(self, name, x)

    @property
    def positive(self) -> bool:
        return self.alpha > 0 and self.beta > 0 and self.gamma > 0

    def require_positive(self) -> None:
        if not self.positive:
            raise DegenerateParams(f"alpha, beta, gamma must all be > 0: {self}")

    def astuple(self):
        return (self.alpha, self.beta, self.gamma)


class WalkState(NamedTuple):
    prev: int
    cur: int


def transition_weights(g: Graph, p: Node2vecParams, s: WalkState):
    """Neighbors of ``s.cur`` and their unnormalised node2vec weights."""
    prev, cur = int(s.prev), int(s.cur)
    if not g.has_edge(prev, cur):
        raise ValueError(f"{s} is not a directed edge of the graph")
    nbrs = g.neighbors(cur)
    w = np.where(np.isin(nbrs, g.neighbors(prev), assume_unique=True), p.beta, p.gamma)
    w[nbrs == prev] = p.alpha
    if not w.sum() > 0:
        raise DeadEnd(f"all transition weights are zero at state {s}")
    return nbrs, w


def _pick(cum, r):
    j = int(np.searchsorted(cum, r, side="right"))
    if j == len(cum):
        # r == total after rounding: take the last positive weight
        j = int(np.flatnonzero(np.diff(np.concatenate([[0.0], cum])) > 0)[-1])
    return j


def step(g: Graph, p: Node2vecParams, s: WalkState, rng: np.random.Generator) -> WalkState:
    nbrs, w = transition_weights(g, p, s)
    cum = np.cumsum(w)
    j = _pick(cum, rng.random() * cum[-1])
    return WalkState(int(s.cur), int(nbrs[j]))


# -- numba kernels ------------------------------------------------------------

@numba.njit(cache=True, inline="always")
def _choose(indptr, indices, alpha, beta, gamma, prev, cur, u, buf):
    """Edge id of the next directed edge out of (prev, cur), or -1 on a dead end."""
    start = indptr[cur]
    end = indptr[cur + 1]
    pend = indptr[prev + 1]
    q = indptr[prev]
    total = 0.0
    for j in range(start, end):
        w = indices[j]
        if w == prev:
            x = alpha
        else:
            while q < pend and indices[q] < w:
                q += 1
            if q < pend and indices[q] == w:
                x = beta
            else:
                x = gamma
        total += x
        buf[j - start] = total
    if not total > 0.0:
        return -1
    r = u * total
    for j in range(end - start):
        if r < buf[j]:
            return start + j
    last = 0.0
    pick = -1
    for j in range(end - start):
        if buf[j] > last:
            pick = j
        last = buf[j]
    return start + pick


@numba.njit(cache=True, nogil=True)
def _walk_kernel(indptr, indices, alpha, beta, gamma, prev, cur, n_steps, rng,
                 edge_counts, traj):
    maxdeg = 0
    for v in range(len(indptr) - 1):
        maxdeg = max(maxdeg, indptr[v + 1] - indptr[v])
    buf = np.empty(maxdeg)
    n_rec = traj.shape[0]
    for t in range(n_steps):
        e = _choose(indptr, indices, alpha, beta, gamma, prev, cur, rng.random(), buf)
        if e < 0:
            return t, prev, cur
        prev = cur
        cur = indices[e]
        edge_counts[e] += 1
        if t < n_rec:
            traj[t] = cur
    return n_steps, prev, cur


@numba.njit(cache=True, nogil=True)
def _next_kernel(indptr, indices, alpha, beta, gamma, prev, cur, n, rng, out):
    buf = np.empty(indptr[cur + 1] - indptr[cur])
    for i in range(n):
        e = _choose(indptr, indices, alpha, beta, gamma, prev, cur, rng.random(), buf)
        if e < 0:
            return i
        out[i] = indices[e]
    return n


@numba.njit(cache=True, nogil=True)
def _sojourn_kernel(indptr, indices, k, alpha, beta, gamma, n_samples, rng, out):
    maxdeg = 0
    for v in range(len(indptr) - 1):
        maxdeg = max(maxdeg, indptr[v + 1] - indptr[v])
    buf = np.empty(maxdeg)
    for s in range(n_samples):
        prev = k
        cur = 0
        tau = 1
        while True:
            e = _choose(indptr, indices, alpha, beta, gamma, prev, cur, rng.random(), buf)
            if e < 0:
                return s
            nxt = indices[e]
            if nxt >= k:
                break
            prev = cur
            cur = nxt
            tau += 1
        out[s] = tau
    return n_samples


# -- occupancy -------------------------------------------------------------------

@dataclass
class OccupancyCounts:
    steps_total: int
    edge_visits: np.ndarray
    node_visits: np.ndarray
    community_visits: np.ndarray | None
    start: WalkState | None = None
    end: WalkState | None = None
    trajectory: np.ndarray | None = None

    def __add__(self, other: "OccupancyCounts") -> "OccupancyCounts":
        cv = None
        if self.community_visits is not None and other.community_visits is not None:
            cv = self.community_visits + other.community_visits
        return OccupancyCounts(
            self.steps_total + other.steps_total,
            self.edge_visits + other.edge_visits,
            self.node_visits + other.node_visits,
            cv,
        )


def _counts_from_edges(g: Graph, edge_visits, steps, start, end, traj):
    node = np.bincount(g.indices, weights=edge_visits, minlength=g.n_nodes).astype(np.int64)
    comm = None
    if isinstance(g, HouseholdGraph):
        comm = np.bincount(g.community_of, weights=node,
                           minlength=len(g.communities)).astype(np.int64)
    return OccupancyCounts(steps, edge_visits, node, comm, start, end, traj)


def random_directed_edge(g: Graph, rng: np.random.Generator) -> WalkState:
    e = int(rng.integers(g.n_directed))
    return WalkState(int(g.edge_src[e]), int(g.indices[e]))


def run_walk(g: Graph, p: Node2vecParams, T: int, rng: np.random.Generator,
             start: WalkState | None = None, record: int = 0) -> OccupancyCounts:
    """Walk T steps and count the state entered at every step.

    ``start`` defaults to a uniformly random directed edge.  With
    ``record > 0`` the current node after each of the first ``record``
    steps is kept in ``trajectory``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if start is None:
        start = random_directed_edge(g, rng)
    start = WalkState(int(start.prev), int(start.cur))
    if not g.has_edge(*start):
        raise ValueError(f"{start} is not a directed edge")
    edge_counts = np.zeros(g.n_directed, dtype=np.int64)
    traj = np.empty(min(record, T), dtype=np.int64)
    done, prev, cur = _walk_kernel(
        g.indptr, g.indices, p.alpha, p.beta, p.gamma, start.prev, start.cur,
        T, rng, edge_counts, traj,
    )
    if done < T:
        raise DeadEnd(f"walk stuck at state ({prev}, {cur}) after {done} steps")
    return _counts_from_edges(g, edge_counts, T, start, WalkState(int(prev), int(cur)),
                              traj if record else None)


def run_walks(g: Graph, p: Node2vecParams, T: int, seed: int, n_walkers: int,
              workers: int = 1) -> OccupancyCounts:
    """Independent walkers on disjoint PCG64 streams, counts merged by addition."""
    seqs = np.random.SeedSequence(seed).spawn(n_walkers)
    rngs = [np.random.Generator(np.random.PCG64(s)) for s in seqs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(lambda r: run_walk(g, p, T, r), rngs))
    total = parts[0]
    for c in parts[1:]:
        total = total + c
    return total


def sample_next(g: Graph, p: Node2vecParams, s: WalkState, n: int,
                rng: np.random.Generator) -> np.ndarray:
    """n independent one-step draws from state s."""
    out = np.empty(n, dtype=np.int64)
    got = _next_kernel(g.indptr, g.indices, p.alpha, p.beta, p.gamma,
                       int(s.prev), int(s.cur), n, rng, out)
    if got < n:
        raise DeadEnd(f"all transition weights are zero at state {s}")
    return out


def empirical_node_distribution(c: OccupancyCounts) -> StationaryDistribution:
    if c.steps_total < 1:
        raise ValueError("no steps recorded")
    return StationaryDistribution(c.node_visits / c.steps_total)


def extract_universe_trace(nodes, g: HouseholdGraph) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size == 0:
        raise ValueError("empty trajectory")
    return g.community_of[nodes]


def collapse_to_ystar(seq: Sequence) -> np.ndarray:
    """Drop consecutive repeats: [A, A, B, B, A] -> [A, B, A]."""
    a = np.asarray(seq)
    if a.size == 0:
        raise ValueError("empty sequence")
    keep = np.ones(len(a), dtype=bool)
    keep[1:] = a[1:] != a[:-1]
    return a[keep]


def run_ystar(g: HouseholdGraph, p: Node2vecParams, n_transitions: int,
              rng: np.random.Generator, chunk: int = 1_000_000,
              start: WalkState | None = None) -> np.ndarray:
    """Walk until the collapsed community sequence has n_transitions moves."""
    state = start
    pieces = []
    have = 0
    last = None
    while have < n_transitions:
        c = run_walk(g, p, chunk, rng, start=state, record=chunk)
        nodes = np.concatenate([[c.start.cur], c.trajectory]) if not pieces else c.trajectory
        y = collapse_to_ystar(extract_universe_trace(nodes, g))
        if last is not None and y[0] == last:
            y = y[1:]
        if len(y):
            pieces.append(y)
            have += len(y)
            last = y[-1]
        state = c.end
    ystar = np.concatenate(pieces)
    return ystar[: n_transitions + 1]


def ystar_visit_frequencies(ystar, n_universe: int) -> np.ndarray:
    counts = np.bincount(np.asarray(ystar, dtype=np.int64), minlength=n_universe)
    return counts / counts.sum()


# -- sojourn sampling ----------------------------------------------------------------

@dataclass
class SojournSample:
    template: str
    taus: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.taus.mean())

    @property
    def stderr(self) -> float:
        return float(self.taus.std(ddof=1) / math.sqrt(len(self.taus)))


def sample_sojourn(template: CommunityTemplate, p: Node2vecParams, n_samples: int,
                   rng: np.random.Generator) -> SojournSample:
    """Monte-Carlo draws of the time spent in one community.

    Simulated on the community plus one pendant arm per member, entered
    along the arm of member 0.  The entering jump counts, the exiting jump
    does not.
    """
    p.require_positive()
    gad = community_gadget(template)
    out = np.empty(n_samples, dtype=np.int64)
    got = _sojourn_kernel(gad.indptr, gad.indices, template.size,
                          p.alpha, p.beta, p.gamma, n_samples, rng, out)
    if got < n_samples:
        raise DeadEnd("sojourn walk hit a zero-weight state")
    return SojournSample(template.label, out)
