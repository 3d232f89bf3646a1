"""Exact-rational envy-free cake cutting.

Protocol stack: SubCore / Core / Discrepancy / GoLeft / Main, plus
partial-allocation protocols, under the Robertson-Webb query model.
All arithmetic is exact; every emitted allocation is independently
re-verified.
"""

from .cake import (EMPTY, WHOLE, Interval, Piece, is_partition,
                   leftmost_prefix, normalize, piece_intersect,
                   piece_subtract, piece_union, rat)
from .valuation import Oracle, QueryCounter, Valuation, make_oracles, \
    random_instance
from .verify import (Allocation, conservation, dominates, find_dominated_set,
                     is_connected, is_envy_free, is_neat, is_proportional)
from .runtime import ProtocolContext
from .core import core
from .subcore import subcore
from .partial import connected_pieces, proportional_ef_partial
from .snapshots import (Params, Snapshot, bonus, extract_for_piece, f,
                        find_isomorphic_subset, is_significant,
                        verify_iso_count_bound, verify_residue_stability)
from .discrepancy import DiscrepancyOutcome, discrepancy
from .goleft import PermutationGraph, find_cycle_with_T_node, goleft
from .orchestrator import (RunState, divide_and_choose, main,
                           selfridge_conway)

__all__ = [
    "EMPTY", "WHOLE", "Interval", "Piece", "is_partition", "leftmost_prefix",
    "normalize", "piece_intersect", "piece_subtract", "piece_union", "rat",
    "Oracle", "QueryCounter", "Valuation", "make_oracles", "random_instance",
    "Allocation", "conservation", "dominates", "find_dominated_set",
    "is_connected", "is_envy_free", "is_neat", "is_proportional",
    "ProtocolContext", "core", "subcore",
    "connected_pieces", "proportional_ef_partial",
    "Params", "Snapshot", "bonus", "extract_for_piece", "f",
    "find_isomorphic_subset", "is_significant",
    "verify_iso_count_bound", "verify_residue_stability",
    "DiscrepancyOutcome", "discrepancy",
    "PermutationGraph", "find_cycle_with_T_node", "goleft",
    "RunState", "divide_and_choose", "main", "selfridge_conway",
]
