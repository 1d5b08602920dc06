from __future__ import annotations

from .base import BlockAlgorithm, BlockMasterState
from .degree import DegreeHooks
from .kcore import CandidateSet, KCoreHooks, batch_coreness
from .mce import MCEHooks, PrefixTree, batch_mce
from .partition import PartitionHooks

HOOKS = {
    "degree": DegreeHooks,
    "kcore": KCoreHooks,
    "mce": MCEHooks,
    "partition": PartitionHooks,
}

__all__ = [
    "HOOKS",
    "BlockAlgorithm",
    "BlockMasterState",
    "CandidateSet",
    "DegreeHooks",
    "KCoreHooks",
    "MCEHooks",
    "PartitionHooks",
    "PrefixTree",
    "batch_coreness",
    "batch_mce",
]
