"""
Position and label metrics.

The position metric is what the trees traverse by; each evaluation is one
"metric comparison", the unit of query cost. Label metrics decide whether a
tree needs a new node for a training example.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Optional, TYPE_CHECKING

import numpy as np

from .exceptions import DimensionMismatchError, InvalidValueError
from .types import ArrayLike, TaskKind, TaskMode, as_vector, label_class

if TYPE_CHECKING:
    from ..forest.boundary_tree import QueryStats


class MetricKind(Enum):
    EUCLIDEAN = "euclidean"
    CUSTOM = "custom"


class PositionMetric:
    """
    Real-valued function of two positions.

    Euclidean is built in and vectorized; any other callable can be wrapped
    as a custom metric and is then evaluated row by row.
    """

    def __init__(self, kind: MetricKind = MetricKind.EUCLIDEAN,
                 func: Optional[Callable[[np.ndarray, np.ndarray], float]] = None):
        if kind is MetricKind.CUSTOM and func is None:
            raise InvalidValueError("a custom metric needs a function")
        self.kind = kind
        self._func = func

    @classmethod
    def euclidean(cls) -> "PositionMetric":
        return cls(MetricKind.EUCLIDEAN)

    @classmethod
    def custom(cls, func: Callable[[np.ndarray, np.ndarray], float]) -> "PositionMetric":
        return cls(MetricKind.CUSTOM, func)

    def pair(self, a: np.ndarray, b: np.ndarray) -> float:
        """Distance between two already validated positions."""
        if self.kind is MetricKind.EUCLIDEAN:
            diff = a - b
            return float(np.sqrt(np.dot(diff, diff)))
        return float(self._func(a, b))

    def to_rows(self, y: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """Distances from `y` to every row of a 2-D array."""
        if self.kind is MetricKind.EUCLIDEAN:
            diff = rows - y
            return np.sqrt(np.einsum("ij,ij->i", diff, diff))
        return np.fromiter((self._func(row, y) for row in rows), dtype=np.float64, count=len(rows))

    def __repr__(self) -> str:
        return f"PositionMetric({self.kind.value})"


def distance(metric: PositionMetric, a: ArrayLike, b: ArrayLike,
             stats: Optional["QueryStats"] = None) -> float:
    """
    Validated distance between two positions.

    Counts one metric comparison on `stats` when given.
    """
    va = as_vector(a)
    vb = as_vector(b)
    if va.shape[0] != vb.shape[0]:
        raise DimensionMismatchError(va.shape[0], vb.shape[0])
    value = metric.pair(va, vb)
    if stats is not None:
        stats.metric_comparisons += 1
    return value


class LabelMetricKind(Enum):
    DISCRETE = "discrete"
    ABSOLUTE_DIFFERENCE = "absolute-difference"
    ALWAYS_FAR = "always-far"


class LabelDistance(NamedTuple):
    """Result of a label comparison; `far` marks the always-far sentinel."""
    value: float
    far: bool = False

    def exceeds(self, epsilon: float) -> bool:
        return self.far or self.value > epsilon


FAR = LabelDistance(0.0, far=True)


@dataclass(frozen=True)
class LabelMetric:
    kind: LabelMetricKind

    @classmethod
    def for_mode(cls, mode: TaskMode) -> "LabelMetric":
        """The label metric each task uses to decide insertion."""
        if mode.kind is TaskKind.CLASSIFICATION:
            return cls(LabelMetricKind.DISCRETE)
        if mode.kind is TaskKind.REGRESSION:
            return cls(LabelMetricKind.ABSOLUTE_DIFFERENCE)
        return cls(LabelMetricKind.ALWAYS_FAR)

    @property
    def always_far(self) -> bool:
        return self.kind is LabelMetricKind.ALWAYS_FAR

    def pair(self, a: np.ndarray, b: np.ndarray) -> LabelDistance:
        if self.kind is LabelMetricKind.ALWAYS_FAR:
            return FAR
        if a.shape[0] != b.shape[0]:
            raise DimensionMismatchError(a.shape[0], b.shape[0], "label")
        if self.kind is LabelMetricKind.DISCRETE:
            return LabelDistance(0.0 if label_class(a) == label_class(b) else 1.0)
        return LabelDistance(float(np.max(np.abs(a - b))))


def label_distance(metric: LabelMetric, a: ArrayLike, b: ArrayLike) -> LabelDistance:
    """Validated label comparison."""
    va = as_vector(a, what="label")
    vb = as_vector(b, what="label")
    if va.shape[0] != vb.shape[0]:
        raise DimensionMismatchError(va.shape[0], vb.shape[0], "label")
    return metric.pair(va, vb)
