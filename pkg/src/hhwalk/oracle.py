"""Exact stationary distributions of the directed-edge chain.

Rows and columns of the transition matrix are directed-edge ids as
defined by :class:`hhwalk.graphs.Graph` (CSR positions).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .distribution import StationaryDistribution
from .errors import DeadEnd, DeadEndState, DegenerateParams, NotConverged, SingularSystem
from .graphs import Graph
from .walk import Node2vecParams, WalkState, transition_weights

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000


@dataclass(frozen=True, eq=False)
class EdgeChain:
    graph: Graph
    P: sp.csr_matrix

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    def row(self, u: int, v: int) -> dict[tuple[int, int], float]:
        """Transition probabilities out of directed edge (u, v), keyed by target edge."""
        e = self.graph.edge_id(u, v)
        lo, hi = self.P.indptr[e], self.P.indptr[e + 1]
        g = self.graph
        return {
            (int(g.edge_src[f]), int(g.indices[f])): float(x)
            for f, x in zip(self.P.indices[lo:hi], self.P.data[lo:hi])
        }


def build_edge_chain(g: Graph, p: Node2vecParams) -> EdgeChain:
    n = g.n_directed
    rows, cols, vals = [], [], []
    for e in range(n):
        u, v = int(g.edge_src[e]), int(g.indices[e])
        try:
            _, w = transition_weights(g, p, WalkState(u, v))
        except DeadEnd as exc:
            raise DeadEndState(str(exc)) from None
        start = int(g.indptr[v])
        rows.append(np.full(len(w), e))
        cols.append(np.arange(start, start + len(w)))
        vals.append(w / w.sum())
    P = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return EdgeChain(g, P)


def balance_residual(chain: EdgeChain, pi) -> float:
    """L1 norm of pi P - pi."""
    x = np.asarray(pi, dtype=float)
    return float(np.abs(chain.P.T @ x - x).sum())


def _power_iteration(chain, tol, max_iter, window=200):
    PT = chain.P.T.tocsr()
    n = chain.n_states
    x = np.full(n, 1.0 / n)
    damped = False
    best, best_at = np.inf, 0
    res = np.inf
    for it in range(1, max_iter + 1):
        z = PT @ x
        res = np.abs(z - x).sum()
        if res <= tol:
            return x, it
        x = 0.5 * (x + z) if damped else z
        x /= x.sum()
        if res < best * 0.999:
            best, best_at = res, it
        elif not damped and it - best_at > window:
            # residual stalled: likely a periodic chain, switch to the lazy walk
            log.info("power iteration stalled at %.3e; enabling damping", res)
            damped = True
            best, best_at = np.inf, it
    raise NotConverged(max_iter, res)


def _direct(chain):
    n = chain.n_states
    A = (chain.P.T - sp.identity(n, format="csr")).tolil()
    A[n - 1, :] = np.ones(n)
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        if n < DENSE_LIMIT:
            x = np.linalg.solve(A.toarray(), b)
        else:
            with np.errstate(all="raise"):
                x = spla.spsolve(A.tocsc(), b)
    except (np.linalg.LinAlgError, RuntimeError, FloatingPointError) as exc:
        raise SingularSystem(str(exc)) from None
    if not np.all(np.isfinite(x)):
        raise SingularSystem("direct solve produced non-finite values")
    return x


def solve_stationary(chain: EdgeChain, method: str = "direct", tol: float = 1e-12,
                     max_iter: int = 1_000_000) -> StationaryDistribution:
    """Edge stationary distribution with ||pi P - pi||_1 <= tol."""
    if method in ("direct", "direct_solve"):
        x = _direct(chain)
    elif method in ("power", "power_iteration"):
        x, _ = _power_iteration(chain, tol, max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    if np.any(x < -1e-10):
        raise SingularSystem("solution has negative entries; chain not irreducible?")
    x = np.clip(x, 0.0, None)
    x /= x.sum()
    res = balance_residual(chain, x)
    if res > max(tol, 1e-14):
        if method.startswith("direct"):
            raise SingularSystem(f"balance residual {res:.3e} exceeds tol {tol:.1e}")
        raise NotConverged(max_iter, res)
    return StationaryDistribution(x, support="edge")


def project_edges_to_nodes(edge_dist, g: Graph) -> StationaryDistribution:
    """pi(v) = sum of edge probabilities over directed edges pointing into v."""
    x = np.asarray(edge_dist, dtype=float)
    return StationaryDistribution(np.bincount(g.indices, weights=x, minlength=g.n_nodes))


def node_stationary(g: Graph, p: Node2vecParams, method="direct", tol=1e-12):
    """Convenience: build, solve and project in one call."""
    chain = build_edge_chain(g, p)
    return project_edges_to_nodes(solve_stationary(chain, method, tol), g)


# -- triangle with asymmetric pendant arms -----------------------------------------

def build_asym_triangle_graph(n: int, p: int, m: int) -> Graph:
    """Triangle u=0, v=1, w=2 with n, p, m pendant nodes on u, v, w."""
    if min(n, p, m) < 0:
        raise ValueError("arm counts must be >= 0")
    edges = [(0, 1), (0, 2), (1, 2)]
    nxt = 3
    for hub, count in ((0, n), (1, p), (2, m)):
        for _ in range(count):
            edges.append((hub, nxt))
            nxt += 1
    return Graph.from_edges(nxt, edges)


def asym_triangle_closed_form(n: int, p: int, m: int,
                              params: Node2vecParams) -> StationaryDistribution:
    """Closed-form edge distribution on ``build_asym_triangle_graph(n, p, m)``."""
    a, b, c = params.astuple()
    fu, fv, fw = a + b + n * c, a + b + p * c, a + b + m * c
    value = {
        "E1": fu * fv * fw,
        "E2": (a + (n + 1) * c) * fv * fw,
        "E3": fu * (a + (p + 1) * c) * fw,
        "E4": fu * fv * (a + (m + 1) * c),
    }
    g = build_asym_triangle_graph(n, p, m)
    raw = np.array([value[asym_edge_class(g, e, n, p)] for e in range(g.n_directed)])
    Z = raw.sum()
    if not Z > 0:
        raise DegenerateParams("normalisation constant is zero")
    return StationaryDistribution(raw / Z, support="edge")


def asym_edge_class(g: Graph, e: int, n: int, p: int) -> str:
    s, d = int(g.edge_src[e]), int(g.indices[e])
    if s < 3 and d < 3:
        return "E1"
    pendant = max(s, d)
    if pendant < 3 + n:
        return "E2"
    if pendant < 3 + n + p:
        return "E3"
    return "E4"
