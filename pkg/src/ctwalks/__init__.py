"""Community-aware temporal walks with continuous-time walk encoding.

The package covers the full path from a raw interaction stream to link
prediction scores: ingestion and chronological splitting, Louvain
communities with intra/inter subgraph derivation, confined time-biased
walk sampling, walk-set anonymization, a GRU encoder with continuous
hidden-state evolution between observations, and training/evaluation
utilities.  A separate theory module holds executable oracles for the
first-passage bound and the factorization target of the walk process.
"""

from .anonymize import (
    AnonymizedNodeRep, AnonymizedWalk, aggregate_positions, anonymize_interaction,
    anonymize_walks, interaction_feature_arrays, position_vector,
)
from .communities import (
    CommunityGraphs, CommunityPartition, assign_unseen_community, bridging_nodes,
    derive_subgraphs, extend_partition, load_partition, louvain, modularity,
    save_partition,
)
from .encoder import (
    EncoderParams, IntegrationDiverged, SolverConfig, encode_walk, gru_update,
    init_params, integrate, load_checkpoint, ode_rhs, pool_and_score,
    rk38_solve, rk38_step, save_checkpoint, transform_interval,
)
from .events import (
    DatasetSplits, Event, EventStream, GraphStats, IngestError, NegativeSet,
    SplitError, TemporalAdjacency, WeightedTemporalGraph, attach_negatives,
    build_weighted_graph, chronological_split, compute_stats, full_edge_set,
    ingest_events, load_splits, mask_inductive_nodes, sample_negatives,
    save_splits, write_events,
)
from .metrics import average_precision, roc_auc
from .pipeline import (
    Adam, ConfigError, MetricsReport, RunConfig, TrainingDiverged,
    TrainingHistory, Workspace, build_partition, build_splits, evaluate,
    evaluate_scores, make_params, make_solver, prepare, train,
)
from .synthetic import gateway_stream, planted_stream
from .theory import (
    Lemma1Report, PmiTarget, StaticGraph, TransitionMatrices, bridging_mask,
    build_matrices, check_lemma1, first_passage, pmi_target,
)
from .walks import (
    TemporalWalk, dump_walks, sample_walk, sample_walk_matrix, sample_walk_sets,
    transition_distribution,
)

__version__ = "0.1.0"

__all__ = [
    "Adam", "AnonymizedNodeRep", "AnonymizedWalk", "CommunityGraphs",
    "CommunityPartition", "ConfigError", "DatasetSplits", "EncoderParams",
    "Event", "EventStream", "GraphStats", "IngestError", "IntegrationDiverged",
    "Lemma1Report", "MetricsReport", "NegativeSet", "PmiTarget", "RunConfig",
    "SolverConfig", "SplitError", "StaticGraph", "TemporalAdjacency",
    "TemporalWalk", "TrainingDiverged", "TrainingHistory", "TransitionMatrices",
    "WeightedTemporalGraph", "Workspace", "aggregate_positions",
    "anonymize_interaction", "anonymize_walks", "assign_unseen_community",
    "attach_negatives", "average_precision", "bridging_mask", "bridging_nodes",
    "build_matrices", "build_partition", "build_splits", "build_weighted_graph",
    "check_lemma1", "chronological_split", "compute_stats", "derive_subgraphs",
    "dump_walks", "encode_walk", "evaluate", "evaluate_scores",
    "extend_partition", "first_passage", "full_edge_set", "gateway_stream",
    "gru_update", "ingest_events", "init_params", "integrate",
    "interaction_feature_arrays", "load_checkpoint", "load_partition",
    "load_splits", "louvain", "make_params", "make_solver",
    "mask_inductive_nodes", "modularity", "ode_rhs", "planted_stream",
    "pmi_target", "pool_and_score", "position_vector", "prepare", "rk38_solve",
    "rk38_step", "roc_auc", "sample_negatives", "sample_walk",
    "sample_walk_matrix", "sample_walk_sets", "save_checkpoint",
    "save_partition", "save_splits", "train", "transform_interval",
    "transition_distribution", "write_events",
]
