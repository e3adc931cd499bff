"""Graph structures, separation criteria and exhaustive enumeration."""
from bccd.graphs.core import CiStatement, Dag, Mag, Mark, MixedGraph, Pag
from bccd.graphs.enumeration import (
    CANONICAL_ORDER_VERSION,
    dag_index,
    dag_table,
    enumerate_dags,
    index_of_dag,
    markov_equivalence_class,
    pag_of_class,
)
from bccd.graphs.separation import (
    ancestors,
    d_separated,
    independence_fingerprint,
    latent_project,
    m_separated,
    markov_equivalent,
    pag_of,
    potentially_directed_path,
)
from bccd.graphs.textio import format_graph, parse_graph

__all__ = [
    "CANONICAL_ORDER_VERSION",
    "CiStatement",
    "Dag",
    "Mag",
    "Mark",
    "MixedGraph",
    "Pag",
    "ancestors",
    "d_separated",
    "dag_index",
    "dag_table",
    "enumerate_dags",
    "format_graph",
    "independence_fingerprint",
    "index_of_dag",
    "latent_project",
    "m_separated",
    "markov_equivalence_class",
    "markov_equivalent",
    "pag_of",
    "pag_of_class",
    "parse_graph",
    "potentially_directed_path",
]
