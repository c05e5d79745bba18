import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hhwalk.errors import NotAutomorphic, RetriesExhausted, TemplateSizeMismatch
from hhwalk.graphs import (
    CommunityTemplate,
    DegreeSequence,
    Graph,
    UniverseGraph,
    common_neighbors,
    community_gadget,
    contract_to_universe,
    expand_household,
    household_from_edges,
    load_household,
    parse_template,
    sample_poisson_degrees,
    sample_universe_configuration_model,
    validate_household,
    write_communities,
    write_edge_list,
)


def test_poisson_degrees_mean_over_seeds():
    means = [sample_poisson_degrees(100, 4.0, np.random.default_rng(s)).as_array().mean()
             for s in range(50)]
    # conditioning on >= 1 lifts the mean to 4/(1-e^-4) ~ 4.07
    assert all(3.2 <= m <= 4.8 for m in means)
    assert abs(np.mean(means) - 4 / (1 - np.exp(-4))) < 0.1


def test_poisson_degrees_tiny_lambda_forces_ones():
    d = sample_poisson_degrees(2, 1e-4, np.random.default_rng(0))
    assert d.values == (1, 1)


def test_poisson_degrees_deterministic_and_even():
    a = sample_poisson_degrees(100, 4.0, np.random.default_rng(11))
    b = sample_poisson_degrees(100, 4.0, np.random.default_rng(11))
    assert a == b
    assert sum(a) % 2 == 0 and min(a) >= 1 and len(a) == 100


def test_degree_sequence_invariants():
    with pytest.raises(ValueError):
        DegreeSequence((1, 2))
    with pytest.raises(ValueError):
        DegreeSequence((0, 2))


def test_configuration_model_cubic_four_nodes_is_k4():
    u = sample_universe_configuration_model([3, 3, 3, 3], np.random.default_rng(0))
    assert u.n_edges == 6
    assert {tuple(e) for e in u.edges()} == set(itertools.combinations(range(4), 2))


def test_configuration_model_all_ones_exhausts():
    with pytest.raises(RetriesExhausted):
        sample_universe_configuration_model([1, 1, 1, 1], np.random.default_rng(0),
                                            max_retries=200)


def test_configuration_model_triangle():
    u = sample_universe_configuration_model([2, 2, 2], np.random.default_rng(3))
    assert {tuple(e) for e in u.edges()} == {(0, 1), (0, 2), (1, 2)}


def test_configuration_model_realises_degrees():
    rng = np.random.default_rng(5)
    d = sample_poisson_degrees(60, 4.0, rng)
    u = sample_universe_configuration_model(d, rng)
    assert list(u.degrees) == list(d)
    assert u.is_connected()


def test_universe_rejects_disconnected():
    with pytest.raises(ValueError):
        UniverseGraph.from_edges(4, [(0, 1), (2, 3)])


def test_graph_rejects_loops_and_multiedges():
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 0)])
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 1), (1, 0)])


def test_ring_small_sizes_are_cliques():
    for k in range(1, 6):
        assert CommunityTemplate.ring(k) == CommunityTemplate.clique(k)
    r = CommunityTemplate.ring(9)
    assert r.kind == "ring"
    assert set(r.graph().degrees) == {4}


def test_custom_template_checks():
    cycle5 = [(i, (i + 1) % 5) for i in range(5)]
    t = CommunityTemplate.custom(5, cycle5)
    assert t.label == "X5"
    path = [(0, 1), (1, 2)]
    with pytest.raises(NotAutomorphic):
        CommunityTemplate.custom(3, path)
    with pytest.raises(NotAutomorphic):
        CommunityTemplate.custom(4, [(0, 1), (2, 3)])  # disconnected
    with pytest.raises(NotAutomorphic):
        CommunityTemplate.custom(9, [(i, (i + 1) % 9) for i in range(9)])


def test_parse_template():
    assert parse_template("C4") == CommunityTemplate.clique(4)
    assert parse_template("ring:7") == CommunityTemplate.ring(7)
    assert parse_template("R5") == CommunityTemplate.clique(5)


def test_expand_triangle_universe():
    u = UniverseGraph.from_edges(3, [(0, 1), (0, 2), (1, 2)])
    h = expand_household(u)
    # every universe degree is 2, so three C2 communities joined by three arms
    assert h.n_nodes == 6 and h.n_edges == 3 + 3
    assert set(h.degrees) == {2}
    assert not h.has_triangle()
    assert any("triangle" in v for v in validate_household(h).violations)


def test_expand_degree_one_community():
    u = UniverseGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    h = expand_household(u)
    for c in h.communities[1:]:
        assert len(c.members) == 1
        assert h.degree(int(c.members[0])) == 1


def test_expand_k4_edge_count(k4_household):
    h = k4_household
    assert h.n_nodes == 12
    assert set(h.degrees) == {3}
    # direct count: four triangles plus one arm per universe edge
    assert h.n_edges == 4 * 3 + 6 == 18
    assert h.n_edges == sum(len(c.members) ** 2 for c in h.communities) // 2


def test_expand_template_size_mismatch(k4_universe):
    with pytest.raises(TemplateSizeMismatch):
        expand_household(k4_universe, lambda d: CommunityTemplate.clique(d + 1))


def test_arm_layout_is_sorted_neighbor_order(k4_household):
    h = k4_household
    for c in h.communities:
        vp = c.universe_node
        for j, up in enumerate(h.universe.neighbors(vp)):
            member = int(c.members[j])
            assert h.community_of[h.arm_of[member]] == up
            assert h.neighbor_node(vp, int(up)) == member


def test_common_neighbors(k4_household):
    h = k4_household
    a, b, c = h.communities[0].members
    assert list(common_neighbors(h, a, b)) == [c]
    assert len(common_neighbors(h, a, int(h.arm_of[a]))) == 0
    u = UniverseGraph.from_edges(6, [(0, i) for i in range(1, 6)] + [(1, 2)])
    h5 = expand_household(u)
    m = h5.communities[0].members
    assert len(common_neighbors(h5, m[0], m[1])) == 3
    with pytest.raises(ValueError):
        common_neighbors(h, a, a)


def test_validate_reports_double_arm(k4_household):
    h = k4_household
    edges = [tuple(e) for e in h.edges()]
    # give node 0 a second arm into community 3 (whose node 9 already links to node 2)
    a = int(h.communities[0].members[0])
    target = next(int(x) for x in h.communities[3].members
                  if not h.has_edge(a, int(x)))
    bad = household_from_edges(h.n_nodes, edges + [(a, target)], h.community_of)
    rep = validate_household(bad)
    assert not rep.ok
    assert any("exactly one arm" in v for v in rep.violations)


def test_validate_reports_missing_triangle():
    u = UniverseGraph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)])
    h = expand_household(u)
    rep = validate_household(h)
    assert any("triangle" in v for v in rep.violations)


def test_ring_degree_law():
    u = UniverseGraph.from_edges(8, [(0, i) for i in range(1, 8)])
    h = expand_household(u, "ring")
    assert h.communities[0].template.kind == "ring"
    assert all(h.degree(int(m)) == 5 for m in h.communities[0].members)
    assert validate_household(h).ok


def test_gadget_layout():
    g = community_gadget(CommunityTemplate.clique(3))
    assert g.n_nodes == 6
    assert [g.degree(i) for i in range(6)] == [3, 3, 3, 1, 1, 1]
    assert g.has_edge(1, 4)


def test_edge_list_round_trip(tmp_path, household30):
    h = household30
    write_edge_list(tmp_path / "h.edges", h)
    write_communities(tmp_path / "c.txt", h)
    lines = (tmp_path / "h.edges").read_text().splitlines()
    pairs = [tuple(map(int, s.split())) for s in lines]
    assert pairs == sorted(pairs) and all(a < b for a, b in pairs)
    h2 = load_household(tmp_path / "h.edges", tmp_path / "c.txt")
    assert np.array_equal(h2.indices, h.indices)
    assert [c.template for c in h2.communities] == [c.template for c in h.communities]
    assert validate_household(h2).ok


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(4, 25))
def test_household_invariants_random(seed, n):
    rng = np.random.default_rng(seed)
    d = sample_poisson_degrees(n, 3.5, rng)
    try:
        u = sample_universe_configuration_model(d, rng, max_retries=5000)
    except RetriesExhausted:
        return
    h = expand_household(u)
    h_again = expand_household(u)
    assert np.array_equal(h.indices, h_again.indices)
    # round trip through community contraction
    assert np.array_equal(contract_to_universe(h).edges(), u.edges())
    # clique members have household degree = community size
    for c in h.communities:
        assert all(h.degree(int(m)) == len(c.members) for m in c.members)
    assert h.n_edges == int((u.degrees ** 2).sum()) // 2
    rep = validate_household(h)
    if u.has_branching_node():
        assert rep.ok, rep.violations
