from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from bccd.graphs.core import Dag, Mag
from bccd.graphs.textio import parse_graph

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# node ids of the confounded fixture
X, Y, Z, T, V, W, H = range(7)


@st.composite
def dags(draw, min_nodes=1, max_nodes=5):
    """Random DAG: a random order plus a random subset of forward edges."""
    n = draw(st.integers(min_nodes, max_nodes))
    order = draw(st.permutations(range(n)))
    edges = [
        (order[i], order[j])
        for i in range(n)
        for j in range(i + 1, n)
        if draw(st.booleans())
    ]
    return Dag(n, frozenset(edges))


@st.composite
def mags(draw, min_nodes=2, max_nodes=5):
    """Random MAG via latent projection of a DAG with up to two extra nodes."""
    from bccd.graphs.separation import latent_project

    g = draw(dags(min_nodes, max_nodes + 2))
    k = draw(st.integers(min(min_nodes, g.node_count), min(max_nodes, g.node_count)))
    keep = sorted(draw(st.permutations(range(g.node_count)))[:k])
    return latent_project(g, keep)


@pytest.fixture(scope="session")
def confounded():
    full = parse_graph((FIXTURES / "confounded_dag.txt").read_text(), Dag)
    udag = parse_graph((FIXTURES / "confounded_udag.txt").read_text(), Dag)
    return full, udag


@pytest.fixture(scope="session")
def confounded_mag(confounded) -> Mag:
    from bccd.graphs.separation import latent_project

    return latent_project(confounded[0], range(6))


@pytest.fixture(scope="session")
def mapping():
    from bccd.statements.mapping import get_mapping

    return get_mapping(5)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
