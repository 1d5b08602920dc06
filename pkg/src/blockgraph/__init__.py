"""Block-centric processing of dynamic graphs.

A graph is split into blocks, one per worker; a master drives batch
computations and their incremental maintenance under edge and vertex
updates, using only master/worker and worker/worker messages.
"""
from __future__ import annotations

from .graph import (
    Block,
    DuplicateEdge,
    DuplicateVertex,
    Edge,
    Graph,
    GraphError,
    GraphUpdate,
    MissingEdge,
    MissingVertex,
    SelfLoop,
    UpdateKind,
    VertexState,
    apply_update,
    build_blocks,
    degree,
    merge_blocks,
    neighbors,
)
from .partitioning import (
    DFEPParams,
    FundingState,
    PartitionAssignment,
    RepartitionDecision,
    assign_update,
    check_repartition,
    dfep_partition,
    edge_blocks,
    hash_partition,
    random_partition,
    repartition,
    vertex_owners,
)
from .runtime import (
    MASTER,
    HookFailure,
    Job,
    JobResult,
    Message,
    Mode,
    ModeViolation,
    UnknownEndpoint,
    run_job,
)

__all__ = [
    "MASTER",
    "Block",
    "DFEPParams",
    "DuplicateEdge",
    "DuplicateVertex",
    "Edge",
    "FundingState",
    "Graph",
    "GraphError",
    "GraphUpdate",
    "HookFailure",
    "Job",
    "JobResult",
    "Message",
    "MissingEdge",
    "MissingVertex",
    "Mode",
    "ModeViolation",
    "PartitionAssignment",
    "RepartitionDecision",
    "SelfLoop",
    "UnknownEndpoint",
    "UpdateKind",
    "VertexState",
    "apply_update",
    "assign_update",
    "build_blocks",
    "check_repartition",
    "degree",
    "dfep_partition",
    "edge_blocks",
    "hash_partition",
    "merge_blocks",
    "neighbors",
    "random_partition",
    "repartition",
    "run_job",
    "vertex_owners",
]
