"""Boundary Trees and the Boundary Forest."""

from .boundary_forest import BoundaryForest, Prediction, TreeHit, shepard_estimate
from .boundary_tree import BoundaryTree, QueryStats, TrainResult

__all__ = [
    "BoundaryForest",
    "BoundaryTree",
    "Prediction",
    "QueryStats",
    "TrainResult",
    "TreeHit",
    "shepard_estimate",
]
