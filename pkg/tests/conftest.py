import pytest

from causalcheck import parse_graph
from causalcheck.simulate import EXAMPLE1_DOT, EXAMPLE2_DOT

FRONTDOOR_DOT = """digraph { u [observed="no"]; u -> t; u -> y; t -> m; m -> y; }"""


@pytest.fixture(scope="session")
def fig1a():
    return parse_graph(EXAMPLE1_DOT)


@pytest.fixture(scope="session")
def fig1b():
    return parse_graph(EXAMPLE2_DOT)


@pytest.fixture(scope="session")
def frontdoor_graph():
    return parse_graph(FRONTDOOR_DOT)
