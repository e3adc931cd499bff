"""Bayesian constraint-based search: adjacency stage, ranked logical inference, PAG."""
from bccd.search.algorithm import (
    APPLIED,
    BELOW,
    SKIPPED,
    BccdConfig,
    Decision,
    DiscoveryResult,
    adjacency_search,
    discover,
    format_causal_matrix,
    format_log,
    map_to_pag,
    rank_and_infer,
    score_subset,
    write_log,
)
from bccd.search.state import CausalLogicMatrix, Skeleton, StatementLedger, Status, causal_logic_closure

__all__ = [
    "APPLIED",
    "BELOW",
    "SKIPPED",
    "BccdConfig",
    "CausalLogicMatrix",
    "Decision",
    "DiscoveryResult",
    "Skeleton",
    "StatementLedger",
    "Status",
    "adjacency_search",
    "causal_logic_closure",
    "discover",
    "format_causal_matrix",
    "format_log",
    "map_to_pag",
    "rank_and_infer",
    "score_subset",
    "write_log",
]
