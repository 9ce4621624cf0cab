"""Partition-based parallel sorting on a simulated BSP machine."""

from . import _kernels
from .bsp import CostLedger, CostReport, Machine
from .hss import PartitionStats, hss_partition, hss_sort, optimal_round_count, schedule_ratios
from .keyspace import (
    DistributedInput, DistributionKind, TaggedArray, TaggedKey, generate_input,
    ideal_splitter_ranks, prepare_input, rank_oracle, tag_input,
)
from .partition import SplitterSet, achieved_imbalance, is_globally_balanced, target_range

BACKEND = _kernels.BACKEND
__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CostLedger", "CostReport", "DistributedInput", "DistributionKind", "Machine",
    "PartitionStats", "SplitterSet", "TaggedArray", "TaggedKey", "achieved_imbalance",
    "generate_input", "hss_partition", "hss_sort", "ideal_splitter_ranks", "is_globally_balanced",
    "optimal_round_count", "prepare_input", "rank_oracle", "schedule_ratios", "tag_input",
    "target_range",
]
