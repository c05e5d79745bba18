"""Universe graphs, automorphic community templates and household models.

All graphs are stored in CSR form: ``indptr``/``indices`` with every
neighbor list sorted.  The CSR position of ``v`` inside ``u``'s neighbor
list doubles as the id of the directed edge ``(u, v)``, so node-level,
edge-level and walk-level code share one indexing scheme.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    InvalidHousehold,
    NotAutomorphic,
    RetriesExhausted,
    TemplateSizeMismatch,
)

MAX_CUSTOM_TEMPLATE = 8


def _frozen(a, dtype=np.int64):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


class Graph:
    """Simple undirected graph with sorted neighbor lists (immutable)."""

    def __init__(self, indptr, indices):
        self.indptr = _frozen(indptr)
        self.indices = _frozen(indices)
        n = len(self.indptr) - 1
        self.edge_src = _frozen(np.repeat(np.arange(n), np.diff(self.indptr)))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], **kwargs):
        """Build from an undirected edge list; rejects loops and multi-edges."""
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loop in edge list")
        lo, hi = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
        if np.unique(lo * n + hi).size != len(e):
            raise ValueError("multi-edge in edge list")
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(indptr, dst[order], **kwargs)

    @property
    def n_nodes(self) -> int:
        return len(self.indptr) - 1

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    @property
    def n_directed(self) -> int:
        return len(self.indices)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def edge_dst(self) -> np.ndarray:
        return self.indices

    @property
    def adjacency(self) -> list[tuple[int, ...]]:
        return [tuple(int(x) for x in self.neighbors(v)) for v in range(self.n_nodes)]

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def edge_id(self, u: int, v: int) -> int:
        """Id of directed edge (u, v); raises KeyError if absent."""
        nb = self.neighbors(u)
        j = int(np.searchsorted(nb, v))
        if j == len(nb) or nb[j] != v:
            raise KeyError((u, v))
        return int(self.indptr[u]) + j

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        j = np.searchsorted(nb, v)
        return bool(j < len(nb) and nb[j] == v)

    def edges(self) -> np.ndarray:
        """Undirected edges as an (m, 2) array with u < v, sorted."""
        mask = self.edge_src < self.indices
        return np.column_stack([self.edge_src[mask], self.indices[mask]])

    def is_connected(self) -> bool:
        if self.n_nodes == 0:
            return False
        m = coo_matrix(
            (np.ones(self.n_directed), (self.edge_src, self.indices)),
            shape=(self.n_nodes, self.n_nodes),
        )
        return connected_components(m, directed=False)[0] == 1

    def has_triangle(self) -> bool:
        for u, v in self.edges():
            if len(common_neighbors(self, int(u), int(v))):
                return True
        return False


def common_neighbors(g: Graph, u: int, v: int) -> np.ndarray:
    """Sorted array of nodes adjacent to both u and v."""
    if u == v:
        raise ValueError("common_neighbors needs two distinct nodes")
    return np.intersect1d(g.neighbors(u), g.neighbors(v), assume_unique=True)


class UniverseGraph(Graph):
    """Connected simple graph whose nodes become communities."""

    def __init__(self, indptr, indices):
        super().__init__(indptr, indices)
        if self.n_nodes < 1:
            raise ValueError("universe graph needs at least one node")
        if np.any(self.degrees < 1) and self.n_nodes > 1:
            raise ValueError("universe graph has an isolated node")
        if not self.is_connected():
            raise ValueError("universe graph is not connected")

    @property
    def degree_sequence(self) -> np.ndarray:
        return self.degrees

    def has_branching_node(self) -> bool:
        """At least one degree >= 3, i.e. some household community has a triangle."""
        return bool(np.any(self.degrees >= 3))


@dataclass(frozen=True)
class DegreeSequence:
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(x) for x in self.values))
        if any(x < 1 for x in self.values):
            raise ValueError("degree sequence entries must be >= 1")
        if sum(self.values) % 2:
            raise ValueError("degree sequence has odd sum")

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.int64)


def _poisson_at_least_one(lam, rng, max_retries):
    for _ in range(max_retries):
        x = int(rng.poisson(lam))
        if x >= 1:
            return x
    raise RetriesExhausted(f"Poisson({lam}) kept returning 0")


def sample_poisson_degrees(n: int, lam: float, rng: np.random.Generator,
                           max_retries: int = 100_000) -> DegreeSequence:
    """n i.i.d. Poisson(lam) degrees conditioned on >= 1, with even sum.

    Zeros are redrawn; an odd total is repaired by redrawing the last entry.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if not lam > 0:
        raise ValueError("lam must be positive")
    d = rng.poisson(lam, size=n).astype(np.int64)
    for i in np.flatnonzero(d == 0):
        d[i] = _poisson_at_least_one(lam, rng, max_retries)
    for _ in range(max_retries):
        if d.sum() % 2 == 0:
            return DegreeSequence(tuple(d))
        d[-1] = _poisson_at_least_one(lam, rng, max_retries)
    raise RetriesExhausted("could not reach an even degree sum")


def sample_universe_configuration_model(
    degrees: DegreeSequence | Sequence[int],
    rng: np.random.Generator,
    max_retries: int = 100_000,
) -> UniverseGraph:
    """Uniform stub matching, redrawn until the graph is simple and connected.

    Whole pairings are rejected rather than repaired, so the degree
    sequence is realised exactly.
    """
    if not isinstance(degrees, DegreeSequence):
        degrees = DegreeSequence(tuple(degrees))
    d = degrees.as_array()
    n = len(d)
    stubs = np.repeat(np.arange(n), d)
    for _ in range(max_retries):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        a, b = pairs.min(axis=1), pairs.max(axis=1)
        if np.any(a == b):
            continue
        if np.unique(a * n + b).size != len(a):
            continue
        m = coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
        if connected_components(m, directed=False)[0] != 1:
            continue
        return UniverseGraph.from_edges(n, zip(a.tolist(), b.tolist()))
    raise RetriesExhausted(
        f"no simple connected realisation in {max_retries} pairings; "
        "the degree sequence may be infeasible (e.g. all ones) or need more retries"
    )


# -- community templates ----------------------------------------------------

def _clique_edges(k):
    return tuple(itertools.combinations(range(k), 2))


def _ring_edges(k):
    out = set()
    for i in range(k):
        for s in (1, 2):
            j = (i + s) % k
            if i != j:
                out.add((min(i, j), max(i, j)))
    return tuple(sorted(out))


def is_vertex_transitive(k: int, edges: Sequence[tuple[int, int]]) -> bool:
    """Brute force over all k! relabelings: can node 0 reach every node?"""
    elist = [(int(a), int(b)) for a, b in edges]
    eset = {frozenset(e) for e in elist}
    reached = {0}
    for perm in itertools.permutations(range(k)):
        if perm[0] in reached:
            continue
        if all(frozenset((perm[a], perm[b])) in eset for a, b in elist):
            reached.add(perm[0])
            if len(reached) == k:
                return True
    return len(reached) == k


@dataclass(frozen=True)
class CommunityTemplate:
    """An automorphic community shape: clique, ring or explicit custom edges.

    Use the ``clique``/``ring``/``custom`` constructors; the plain
    constructor does no validation.
    """

    kind: str
    size: int
    custom_edges: tuple[tuple[int, int], ...] = ()

    @classmethod
    def clique(cls, k: int) -> "CommunityTemplate":
        if k < 1:
            raise ValueError("template size must be >= 1")
        return cls("clique", k)

    @classmethod
    def ring(cls, k: int) -> "CommunityTemplate":
        # four-nearest-neighbor rings on <= 5 nodes are complete graphs
        if k <= 5:
            return cls.clique(k)
        return cls("ring", k)

    @classmethod
    def custom(cls, k: int, edges: Iterable[tuple[int, int]]) -> "CommunityTemplate":
        edges = tuple(sorted({(min(a, b), max(a, b)) for a, b in edges}))
        if k > MAX_CUSTOM_TEMPLATE:
            raise NotAutomorphic(
                f"custom templates are limited to {MAX_CUSTOM_TEMPLATE} nodes"
            )
        if any(a == b or not (0 <= a < k and 0 <= b < k) for a, b in edges):
            raise ValueError("bad custom template edge")
        if k > 1 and not Graph.from_edges(k, edges).is_connected():
            raise NotAutomorphic("custom template is not connected")
        if not is_vertex_transitive(k, edges):
            raise NotAutomorphic("custom template has inequivalent nodes")
        return cls("custom", k, edges)

    def edges(self) -> tuple[tuple[int, int], ...]:
        if self.kind == "clique":
            return _clique_edges(self.size)
        if self.kind == "ring":
            return _ring_edges(self.size)
        return self.custom_edges

    @property
    def label(self) -> str:
        prefix = {"clique": "C", "ring": "R"}.get(self.kind, "X")
        return f"{prefix}{self.size}"

    def graph(self) -> Graph:
        return Graph.from_edges(self.size, self.edges())


def clique_templates(d: int) -> CommunityTemplate:
    return CommunityTemplate.clique(d)


def ring_templates(d: int) -> CommunityTemplate:
    return CommunityTemplate.ring(d)


def parse_template(spec: str) -> CommunityTemplate:
    """'C5' / 'R7' / 'clique:5' / 'ring:7' -> template."""
    s = spec.strip().lower()
    if ":" in s:
        kind, k = s.split(":", 1)
    else:
        kind, k = {"c": "clique", "r": "ring"}.get(s[:1], s[:1]), s[1:]
    k = int(k)
    if kind == "clique":
        return CommunityTemplate.clique(k)
    if kind == "ring":
        return CommunityTemplate.ring(k)
    raise ValueError(f"unknown template {spec!r}")


def community_gadget(template: CommunityTemplate) -> Graph:
    """Template graph plus one pendant arm per member.

    Members are 0..k-1, the arm of member i is node k+i.
    """
    k = template.size
    edges = list(template.edges()) + [(i, k + i) for i in range(k)]
    return Graph.from_edges(2 * k, edges)


# -- household model ---------------------------------------------------------

@dataclass(frozen=True)
class Community:
    template: CommunityTemplate
    members: np.ndarray
    universe_node: int


class HouseholdGraph(Graph):
    """Household model built on a universe graph.

    ``community_of[v]`` is the universe node whose community holds ``v``;
    ``arm_of[v]`` is the unique outside neighbor (-1 if there is not
    exactly one).
    """

    def __init__(self, indptr, indices, community_of, communities, universe):
        super().__init__(indptr, indices)
        self.community_of = _frozen(community_of)
        self.communities: list[Community] = list(communities)
        self.universe: UniverseGraph = universe
        ext = self.community_of[self.edge_src] != self.community_of[self.indices]
        n_ext = np.bincount(self.edge_src[ext], minlength=self.n_nodes)
        arm = np.full(self.n_nodes, -1, dtype=np.int64)
        ext_src, ext_dst = self.edge_src[ext], self.indices[ext]
        sel = n_ext[ext_src] == 1
        arm[ext_src[sel]] = ext_dst[sel]
        self.arm_of = _frozen(arm)
        self._external_count = _frozen(n_ext)

    def template_of(self, v: int) -> CommunityTemplate:
        return self.communities[self.community_of[v]].template

    def neighbor_node(self, v_prime: int, u_prime: int) -> int:
        """The member of community v' whose arm leads into community u'."""
        members = self.communities[v_prime].members
        hits = [int(x) for x in members
                if self.arm_of[x] >= 0 and self.community_of[self.arm_of[x]] == u_prime]
        if len(hits) != 1:
            raise KeyError((v_prime, u_prime))
        return hits[0]

    def node_labels(self) -> list[str]:
        return [self.communities[c].template.label for c in self.community_of]


def expand_household(
    universe: UniverseGraph,
    template_for: Callable[[int], CommunityTemplate] | str = "clique",
) -> HouseholdGraph:
    """Replace each universe node of degree d by a d-node community.

    Community blocks are laid out in universe-node order; member j of the
    community of v' carries the arm toward the j-th (sorted) neighbor of v'.
    """
    if isinstance(template_for, str):
        template_for = {"clique": clique_templates, "ring": ring_templates}[template_for]
    deg = universe.degrees
    offset = np.concatenate([[0], np.cumsum(deg)])
    communities = []
    edges = []
    for vp in range(universe.n_nodes):
        d = int(deg[vp])
        t = template_for(d)
        if t.size != d:
            raise TemplateSizeMismatch(
                f"universe node {vp} has degree {d} but template {t.label} has size {t.size}"
            )
        if t.kind == "custom" and t.size > MAX_CUSTOM_TEMPLATE:
            raise NotAutomorphic("custom template too large to verify")
        base = int(offset[vp])
        edges.extend((base + a, base + b) for a, b in t.edges())
        communities.append(Community(t, np.arange(base, base + d), vp))
    for vp in range(universe.n_nodes):
        for j, up in enumerate(universe.neighbors(vp)):
            up = int(up)
            if up > vp:
                jj = universe.edge_id(up, vp) - int(universe.indptr[up])
                edges.append((int(offset[vp]) + j, int(offset[up]) + jj))
    n = int(offset[-1])
    community_of = np.repeat(np.arange(universe.n_nodes), deg)
    return HouseholdGraph.from_edges(
        n, edges, community_of=community_of, communities=communities, universe=universe
    )


def _detect_template(k, local_edges):
    local = tuple(sorted(local_edges))
    if local == _clique_edges(k):
        return CommunityTemplate.clique(k)
    if k >= 6 and local == _ring_edges(k):
        return CommunityTemplate.ring(k)
    # unvalidated; validate_household reports problems
    return CommunityTemplate("custom", k, local)


def household_from_edges(n: int, edges, community_of) -> HouseholdGraph:
    """Rebuild a household model from its edge list and community map."""
    community_of = np.asarray(community_of, dtype=np.int64)
    g = Graph.from_edges(n, edges)
    n_comm = int(community_of.max()) + 1
    cs, cd = community_of[g.edge_src], community_of[g.indices]
    ext = cs < cd
    upairs = np.unique(np.column_stack([cs[ext], cd[ext]]), axis=0)
    universe = UniverseGraph.from_edges(n_comm, map(tuple, upairs.tolist()))
    communities = []
    for c in range(n_comm):
        members = np.flatnonzero(community_of == c)
        pos = {int(m): i for i, m in enumerate(members)}
        local = []
        for m in members:
            for w in g.neighbors(m):
                if int(w) in pos and m < w:
                    local.append((pos[int(m)], pos[int(w)]))
        communities.append(Community(_detect_template(len(members), local), members, c))
    return HouseholdGraph(g.indptr, g.indices, community_of, communities, universe)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_household(g: HouseholdGraph) -> ValidationReport:
    """Check every household-model invariant and list the ones that fail."""
    rep = ValidationReport()
    u = g.universe
    if len(g.communities) != u.n_nodes:
        rep.violations.append("community count differs from universe node count")
        return rep
    for c in g.communities:
        vp = c.universe_node
        if len(c.members) != u.degree(vp):
            rep.violations.append(
                f"community {vp}: size {len(c.members)} != universe degree {u.degree(vp)}"
            )
        pos = {int(m): i for i, m in enumerate(c.members)}
        local = sorted(
            (pos[int(m)], pos[int(w)])
            for m in c.members for w in g.neighbors(m)
            if int(w) in pos and m < w
        )
        if tuple(local) != tuple(sorted(c.template.edges())):
            rep.violations.append(f"community {vp}: internal edges do not match {c.template.label}")
        bad = [int(m) for m in c.members if g._external_count[m] != 1]
        if bad:
            rep.violations.append(f"community {vp}: nodes {bad} do not have exactly one arm")
        targets = sorted(
            int(g.community_of[g.arm_of[m]]) for m in c.members if g.arm_of[m] >= 0
        )
        if len(set(targets)) != len(targets):
            rep.violations.append(f"community {vp}: two arms lead into the same community")
        if not bad and targets != sorted(int(x) for x in u.neighbors(vp)):
            rep.violations.append(f"community {vp}: arms do not match universe edges")
    if np.any(g.edge_src == g.indices):
        rep.violations.append("self-loop present")
    if not g.is_connected():
        rep.violations.append("household graph is not connected")
    if not g.has_triangle():
        rep.violations.append("household graph contains no triangle (walk is periodic)")
    return rep


def require_valid(g: HouseholdGraph) -> None:
    rep = validate_household(g)
    if not rep.ok:
        raise InvalidHousehold("; ".join(rep.violations))


def contract_to_universe(g: HouseholdGraph) -> UniverseGraph:
    """Quotient of g by community membership (inverse of expand_household)."""
    cs, cd = g.community_of[g.edge_src], g.community_of[g.indices]
    ext = cs < cd
    pairs = np.unique(np.column_stack([cs[ext], cd[ext]]), axis=0)
    return UniverseGraph.from_edges(len(g.communities), map(tuple, pairs.tolist()))


# -- text formats ---------------------------------------------------------------

def write_edge_list(path, g: Graph) -> None:
    with open(path, "w") as fh:
        for a, b in g.edges():
            fh.write(f"{a} {b}\n")


def read_edge_list(path) -> list[tuple[int, int]]:
    edges = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        a, b = line.split()
        edges.append((int(a), int(b)))
    return edges


def write_communities(path, g: HouseholdGraph) -> None:
    with open(path, "w") as fh:
        for v, c in enumerate(g.community_of):
            fh.write(f"{v} {c}\n")


def read_communities(path) -> np.ndarray:
    rows = [line.split() for line in Path(path).read_text().splitlines() if line.strip()]
    out = np.empty(len(rows), dtype=np.int64)
    for v, c in rows:
        out[int(v)] = int(c)
    return out


def load_household(edges_path, communities_path) -> HouseholdGraph:
    community_of = read_communities(communities_path)
    return household_from_edges(len(community_of), read_edge_list(edges_path), community_of)
