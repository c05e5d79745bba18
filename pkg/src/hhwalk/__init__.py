"""Stationary distributions of node2vec random walks on household models."""

from .distribution import StationaryDistribution, tv_distance
from .errors import (
    DeadEnd,
    DeadEndState,
    DegenerateParams,
    HHWalkError,
    InvalidHousehold,
    NotAutomorphic,
    NotConverged,
    RetriesExhausted,
    SingularSystem,
    TemplateSizeMismatch,
)
from .graphs import (
    CommunityTemplate,
    DegreeSequence,
    Graph,
    HouseholdGraph,
    UniverseGraph,
    common_neighbors,
    expand_household,
    sample_poisson_degrees,
    sample_universe_configuration_model,
    validate_household,
)
from .oracle import (
    asym_triangle_closed_form,
    build_asym_triangle_graph,
    build_edge_chain,
    node_stationary,
    project_edges_to_nodes,
    solve_stationary,
)
from .sojourn import (
    expected_sojourn,
    expected_sojourn_clique,
    expected_sojourn_generic,
    expected_sojourn_ring,
    expected_sojourn_ring6,
    poisson_limit_distribution,
    ring_kernel,
    sojourn_pmf_clique,
    sojourn_pmf_ring,
    stationary_household,
    stationary_srw,
)
from .walk import (
    Node2vecParams,
    OccupancyCounts,
    WalkState,
    collapse_to_ystar,
    empirical_node_distribution,
    extract_universe_trace,
    run_walk,
    sample_sojourn,
    step,
    transition_weights,
)

__version__ = "0.1.0"
