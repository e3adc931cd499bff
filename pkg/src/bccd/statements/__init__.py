"""Logical causal statements and the uDAG-to-statement mapping."""
from bccd.statements.core import (
    Cause,
    CausalStatement,
    DisjunctiveCause,
    Kind,
    NonAdjacent,
    NonCause,
    statement_space,
)
from bccd.statements.mapping import (
    MappingTable,
    build_mapping,
    dump_text,
    get_mapping,
    load_mapping,
    save_mapping,
)
from bccd.statements.rules import (
    Certainty,
    bruteforce_statements,
    noncause_statements_from_optimal_udag,
    optimal_udags_of_mag,
    statements_from_faithful_structure,
    udag_ci_query,
    udag_unique_path_query,
)

__all__ = [
    "Cause",
    "CausalStatement",
    "Certainty",
    "DisjunctiveCause",
    "Kind",
    "MappingTable",
    "NonAdjacent",
    "NonCause",
    "bruteforce_statements",
    "build_mapping",
    "dump_text",
    "get_mapping",
    "load_mapping",
    "noncause_statements_from_optimal_udag",
    "optimal_udags_of_mag",
    "save_mapping",
    "statement_space",
    "statements_from_faithful_structure",
    "udag_ci_query",
    "udag_unique_path_query",
]
