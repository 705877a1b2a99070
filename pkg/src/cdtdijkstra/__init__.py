"""Single-source optimal path planning over a convex dissection of 2D free space."""
from .dissection import (ConvexDissection, ConvexPolygon, Cutline, NotInFreeSpace, TopologyGraph,
                         adjacent_cutlines, build_topology_graph, locate, validate_dissection)
from .encoding import CdtEncoding, concat, cutline_sequence, encode_path, trivial_encoding
from .env_model import (Environment, OccupancyGrid, grid_to_environment, load_occupancy_grid,
                        load_polygon_env, make_environment)
from .kernels import BACKEND
from .planner import Planner, PlannerState, Unreachable, get_goal, set_init
from .shortest_path import get_shortest_path

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CdtEncoding", "ConvexDissection", "ConvexPolygon", "Cutline", "Environment",
    "NotInFreeSpace", "OccupancyGrid", "Planner", "PlannerState", "TopologyGraph", "Unreachable",
    "adjacent_cutlines", "build_topology_graph", "concat", "cutline_sequence", "encode_path",
    "get_goal", "get_shortest_path", "grid_to_environment", "load_occupancy_grid", "load_polygon_env",
    "locate", "make_environment", "set_init", "trivial_encoding", "validate_dissection",
]
