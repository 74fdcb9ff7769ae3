"""Constrained force-directed graph layout with grid snapping and adaptive alignment."""

from gridlayout.graph import (
    Graph,
    GridSpec,
    IdealDistances,
    LayoutState,
    Node,
    closest_grid_point,
    load_graph,
    shortest_path_distances,
)
from gridlayout.solver import LayoutMode, run_pipeline

__all__ = [
    "Graph",
    "GridSpec",
    "IdealDistances",
    "LayoutState",
    "LayoutMode",
    "Node",
    "closest_grid_point",
    "load_graph",
    "run_pipeline",
    "shortest_path_distances",
]
