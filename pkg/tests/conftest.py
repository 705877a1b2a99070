import math

import pytest

from cdtdijkstra.dissection import build_topology_graph
from cdtdijkstra.env_model import make_environment

SQUARE = [(0, 0), (10, 0), (10, 10), (0, 10)]
CENTER_BLOCK = [(4, 4), (6, 4), (6, 6), (4, 6)]
ABOVE_COST = 2 * math.sqrt(10) + 2


@pytest.fixture(scope="session")
def block_env():
    return make_environment(SQUARE, [CENTER_BLOCK])


@pytest.fixture(scope="session")
def block_map(block_env):
    return build_topology_graph(block_env)


@pytest.fixture(scope="session")
def empty_map():
    return build_topology_graph(make_environment(SQUARE))
