"""
Boundary Forest

An online, instance-based learner built from a collection of Boundary
Trees, for classification, regression and approximate nearest-neighbour
retrieval, with the benchmark harness used to study its scaling.
"""

__version__ = "1.0.0"

from .core.config import BoundaryForestConfig, ForestParams, load_config
from .core.distance import LabelMetric, PositionMetric, distance
from .core.exceptions import BoundaryForestError
from .core.store import ExampleStore
from .core.types import DataPoint, TaskMode
from .forest.boundary_forest import BoundaryForest, shepard_estimate
from .forest.boundary_tree import BoundaryTree
from .monitoring.metrics import MetricsCollector

__all__ = [
    "BoundaryForest",
    "BoundaryForestConfig",
    "BoundaryForestError",
    "BoundaryTree",
    "DataPoint",
    "ExampleStore",
    "ForestParams",
    "LabelMetric",
    "MetricsCollector",
    "PositionMetric",
    "TaskMode",
    "distance",
    "load_config",
    "shepard_estimate",
]
