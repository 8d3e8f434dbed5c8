"""Cluster consensus of continuous-time multi-agent networks with switching
coupling: graph primitives, cluster measures, transition-matrix integration,
condition checkers and a seeded experiment runner."""

from .conditions import (
    CommonInfluenceError,
    CommonInfluenceSchedule,
    ConditionReport,
    ProjectionError,
    check_A1,
    check_A2,
    check_A3,
    check_A4,
    check_invariance,
    corollary1_rank_condition,
    extract_common_influence,
    lemma2_bound,
    projection_radius_estimate,
    separation_condition,
)
from .dynamics import (
    InputSignal,
    IntegrationError,
    Trajectory,
    TransitionMatrix,
    integrate_state,
    quotient_state,
    quotient_transition,
    transition_matrix,
)
from .experiments import ConfigError, ExperimentConfig, RunReport, run_experiment
from .graph import (
    Clustering,
    CouplingSchedule,
    DeltaEdgeGraph,
    Profile,
    Segment,
    delta_edges,
    has_cluster_spanning_tree,
    integrate_weights,
    is_cluster_scrambling,
    laplacian_at,
    make_bipartite_random,
    make_ring_lattice,
)
from .measures import (
    cluster_ergodicity,
    cluster_hajnal_diameter,
    eta,
    eta_c_state,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
