"""Brute-force isometry estimation, bound constants, and inequality oracles."""

from .isometry import (
    BudgetExceeded,
    RipEstimate,
    RocEstimate,
    estimate_ric,
    estimate_roc,
)
from .bounds import (
    BoundConstants,
    InvalidPartition,
    bound_constants,
    default_partition,
    ric_frontier_2s,
)
from .checks import (
    LemmaReport,
    RecurrenceReport,
    LEMMA_CASES,
    check_lemma_bounds,
    check_recurrence,
    tail_partition,
)

__all__ = [
    "BudgetExceeded",
    "RipEstimate",
    "RocEstimate",
    "estimate_ric",
    "estimate_roc",
    "BoundConstants",
    "InvalidPartition",
    "bound_constants",
    "default_partition",
    "ric_frontier_2s",
    "LemmaReport",
    "RecurrenceReport",
    "LEMMA_CASES",
    "check_lemma_bounds",
    "check_recurrence",
    "tail_partition",
]
