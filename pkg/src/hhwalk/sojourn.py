"""Expected community sojourn times and the household stationary distribution.

A node's stationary mass on a household model is proportional to the
expected number of jumps the walk makes inside a community of that node's
type per visit (entering jump included).  This module evaluates those
expectations in closed form where one exists (cliques, 6-rings), by a
two-state linear solve for larger rings, and by an absorbing-chain solve
on the community gadget for anything else.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .distribution import StationaryDistribution
from .errors import DegenerateParams, SingularSystem
from .graphs import CommunityTemplate, Graph, HouseholdGraph, community_gadget, require_valid
from .walk import Node2vecParams

PMF_TAIL = 1e-14


def _positive(x, what):
    if not x > 0:
        raise DegenerateParams(f"{what} is zero")
    return x


# -- cliques ------------------------------------------------------------------------

def expected_sojourn_clique(k: int, p: Node2vecParams) -> float:
    """E[tau] for a k-clique community."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        # a lone node is left on the next jump whatever the parameters
        return 1.0
    a, b, c = p.astuple()
    den = _positive(a + (k - 1) * c, "alpha + (k-1) gamma")
    return (a + (k - 1) * (a + (k - 2) * b + 2 * c)) / den


def sojourn_pmf_clique(k: int, p: Node2vecParams, l: int) -> float:
    """P(tau = l) for a k-clique community."""
    if l < 1:
        raise ValueError("l must be >= 1")
    if k == 1:
        return 1.0 if l == 1 else 0.0
    a, b, c = p.astuple()
    enter = _positive(a + (k - 1) * c, "alpha + (k-1) gamma")
    if l == 1:
        return a / enter
    inner = _positive(a + (k - 2) * b + c, "alpha + (k-2) beta + gamma")
    stay = (a + (k - 2) * b) / inner
    return (k - 1) * c / enter * stay ** (l - 2) * c / inner


# -- rings --------------------------------------------------------------------------

def expected_sojourn_ring6(p: Node2vecParams) -> float:
    a, b, c = p.astuple()
    return (5 * a + 8 * b + 12 * c) / _positive(a + 4 * c, "alpha + 4 gamma")


@dataclass(frozen=True)
class RingKernel:
    """Short/long step chain inside a ring community of size >= 7.

    ``q_xy`` is the probability of an internal step of type y after a step
    of type x (s = to a ring neighbor, l = across to distance two);
    ``p_s``/``p_l`` are the exit probabilities.
    """

    q_ss: float
    q_sl: float
    q_ls: float
    q_ll: float
    p_s: float
    p_l: float
    entry_short: float
    entry_long: float
    entry_exit: float

    @property
    def Q(self) -> np.ndarray:
        return np.array([[self.q_ss, self.q_sl], [self.q_ls, self.q_ll]])

    @property
    def exit(self) -> np.ndarray:
        return np.array([self.p_s, self.p_l])


def ring_kernel(p: Node2vecParams) -> RingKernel:
    a, b, c = p.astuple()
    short = _positive(a + 2 * b + 2 * c, "alpha + 2 beta + 2 gamma")
    long_ = _positive(a + b + 3 * c, "alpha + beta + 3 gamma")
    entry = _positive(a + 4 * c, "alpha + 4 gamma")
    return RingKernel(
        q_ss=(a + b) / short,
        q_sl=(b + c) / short,
        q_ls=(b + c) / long_,
        q_ll=(a + c) / long_,
        p_s=c / short,
        p_l=c / long_,
        entry_short=2 * c / entry,
        entry_long=2 * c / entry,
        entry_exit=a / entry,
    )


def expected_sojourn_ring(k: int, p: Node2vecParams) -> float:
    """E[tau] for a ring of size k >= 7 via the two-state absorbing chain.

    The result does not depend on k.
    """
    if k < 7:
        raise ValueError("use expected_sojourn_ring6 or the clique formula for k < 7")
    kern = ring_kernel(p)
    Q = kern.Q
    try:
        # m = Q (1 + m): expected further internal steps after a short/long step
        m = np.linalg.solve(np.eye(2) - Q, Q @ np.ones(2))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    return 1.0 + kern.entry_short * (1 + m[0]) + kern.entry_long * (1 + m[1])


def sojourn_pmf_ring(k: int, p: Node2vecParams, m: int) -> float:
    """P(tau = m) for a ring of size k >= 7, via powers of the 2x2 kernel."""
    if k < 7:
        raise ValueError("k must be >= 7")
    if m < 1:
        raise ValueError("m must be >= 1")
    kern = ring_kernel(p)
    if m == 1:
        return kern.entry_exit
    row = np.ones(2) @ np.linalg.matrix_power(kern.Q, m - 2)
    return kern.entry_short * float(row @ kern.exit)


def ring_pmf_series(p: Node2vecParams, tail: float = PMF_TAIL):
    """(masses, survival) for tau = 1, 2, ... until P(tau > m) < tail."""
    kern = ring_kernel(p)
    masses = [kern.entry_exit]
    v = np.full(2, kern.entry_short)  # mass sitting in (short, long) after step m
    while v.sum() >= tail:
        masses.append(float(v @ kern.exit))
        v = v @ kern.Q
    return np.array(masses), float(v.sum())


# -- generic gadget solve ------------------------------------------------------------

@functools.lru_cache(maxsize=256)
def _gadget_structure(template: CommunityTemplate):
    """Transient states of the gadget chain and the weight class of every move.

    Returns (entry, rows, cols, cls, n): move i goes from transient state
    rows[i] to cols[i] (-1 for an exit) with weight class cls[i] in
    {0: alpha, 1: beta, 2: gamma}.
    """
    gad: Graph = community_gadget(template)
    k = template.size
    transient = [e for e in range(gad.n_directed) if gad.indices[e] < k]
    index = {e: i for i, e in enumerate(transient)}
    rows, cols, cls = [], [], []
    for e in transient:
        prev, cur = int(gad.edge_src[e]), int(gad.indices[e])
        back = set(gad.neighbors(prev).tolist())
        for x in gad.neighbors(cur).tolist():
            rows.append(index[e])
            cols.append(index[gad.edge_id(cur, x)] if x < k else -1)
            cls.append(0 if x == prev else (1 if x in back else 2))
    return (index[gad.edge_id(k, 0)], np.array(rows), np.array(cols), np.array(cls),
            len(transient))


def expected_sojourn_generic(template: CommunityTemplate, p: Node2vecParams) -> float:
    """E[tau] from the absorbing chain on the directed edges of the community gadget.

    Transient states are directed edges ending at a member; leaving along an
    arm is absorbing.  Solves (I - Q) m = 1 and reads off the entry state.
    """
    entry, rows, cols, cls, n = _gadget_structure(template)
    w = np.array(p.astuple())[cls]
    total = np.bincount(rows, weights=w, minlength=n)
    if np.any(total <= 0):
        raise DegenerateParams(f"zero-weight state in {template.label}")
    inside = cols >= 0
    Q = np.zeros((n, n))
    np.add.at(Q, (rows[inside], cols[inside]), w[inside] / total[rows[inside]])
    try:
        m = np.linalg.solve(np.eye(n) - Q, np.ones(n))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    return float(m[entry])


def expected_sojourn(template: CommunityTemplate, p: Node2vecParams) -> float:
    """Dispatch to the closed form when there is one, else the gadget solve."""
    if template.kind == "clique":
        return expected_sojourn_clique(template.size, p)
    if template.kind == "ring":
        if template.size == 6:
            return expected_sojourn_ring6(p)
        return expected_sojourn_ring(template.size, p)
    return expected_sojourn_generic(template, p)


# -- stationary distributions -------------------------------------------------------

def assemble_stationary(g: HouseholdGraph, tau_of) -> StationaryDistribution:
    """pi(v) proportional to the expected sojourn of v's community type.

    ``tau_of`` maps a template to its expected sojourn time.
    """
    cache = {}
    tau_c = np.empty(len(g.communities))
    for i, c in enumerate(g.communities):
        if c.template not in cache:
            cache[c.template] = float(tau_of(c.template))
        tau_c[i] = cache[c.template]
    sizes = np.array([len(c.members) for c in g.communities])
    Z = float(np.dot(sizes, tau_c))
    return StationaryDistribution(tau_c[g.community_of] / Z)


def stationary_household(g: HouseholdGraph, p: Node2vecParams,
                         validate: bool = True) -> StationaryDistribution:
    p.require_positive()
    if validate:
        require_valid(g)
    return assemble_stationary(g, lambda t: expected_sojourn(t, p))


def stationary_srw(g: Graph) -> StationaryDistribution:
    """Simple-random-walk stationary distribution d_v / 2|E|."""
    return StationaryDistribution(g.degrees / g.n_directed)


def poisson_limit_distribution(case: str, lam: float, n: int, l: int,
                               beta: float | None = None) -> float:
    """Large-n node probability on a Poisson(lam) clique household.

    case: ``alpha_inf``, ``gamma_inf`` or ``alpha0_gamma1`` (needs ``beta``).
    """
    if not lam > 0 or n < 1 or l < 1:
        raise ValueError("need lam > 0, n >= 1, l >= 1")
    if case == "alpha_inf":
        return l / (n * (lam ** 2 + lam))
    if case == "gamma_inf":
        return 1.0 / (n * lam)
    if case == "alpha0_gamma1":
        if beta is None:
            raise ValueError("alpha0_gamma1 needs beta")
        return ((l - 2) * beta + 2) / (lam * n * (beta * (lam - 1) + 2))
    raise ValueError(f"unknown limit case {case!r}")
