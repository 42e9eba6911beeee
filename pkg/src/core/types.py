"""
Domain types shared by every Boundary Forest module.

Positions and label vectors are dense float64 numpy arrays. The helpers here
are the single place where raw input is validated and normalized.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .exceptions import DimensionMismatchError, InvalidValueError

ArrayLike = Union[Sequence[float], np.ndarray]


class TaskKind(Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"
    RETRIEVAL = "retrieval"


@dataclass(frozen=True)
class TaskMode:
    """Task a forest is trained for; regression carries its threshold epsilon."""
    kind: TaskKind
    epsilon: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise InvalidValueError(f"epsilon must be a finite value >= 0, got {self.epsilon}")

    @classmethod
    def classification(cls) -> "TaskMode":
        return cls(TaskKind.CLASSIFICATION)

    @classmethod
    def regression(cls, epsilon: float) -> "TaskMode":
        return cls(TaskKind.REGRESSION, float(epsilon))

    @classmethod
    def retrieval(cls) -> "TaskMode":
        return cls(TaskKind.RETRIEVAL)

    @classmethod
    def parse(cls, name: str, epsilon: float = 0.0) -> "TaskMode":
        """Build a mode from its configuration name."""
        try:
            kind = TaskKind(name.lower())
        except ValueError:
            valid = ", ".join(k.value for k in TaskKind)
            raise InvalidValueError(f"Unknown mode '{name}' (expected one of: {valid})")
        if kind is TaskKind.REGRESSION:
            return cls.regression(epsilon)
        return cls(kind)

    @property
    def name(self) -> str:
        return self.kind.value


def as_vector(values: ArrayLike, dimension: Optional[int] = None, what: str = "position") -> np.ndarray:
    """Return `values` as a finite 1-D float64 array, checking its length."""
    vector = np.array(values, dtype=np.float64)
    if vector.ndim != 1:
        vector = vector.reshape(-1)
    if dimension is not None and vector.shape[0] != dimension:
        raise DimensionMismatchError(dimension, vector.shape[0], what)
    if not np.all(np.isfinite(vector)):
        raise InvalidValueError(f"{what} contains NaN or infinite entries")
    return vector


def one_hot(class_index: int, n_classes: int) -> np.ndarray:
    """Indicator label vector for a class."""
    if not 0 <= class_index < n_classes:
        raise InvalidValueError(f"class index {class_index} outside 0..{n_classes - 1}")
    label = np.zeros(n_classes, dtype=np.float64)
    label[class_index] = 1.0
    return label


def label_class(label: np.ndarray) -> int:
    """Class of an indicator or estimate vector; ties go to the lowest index."""
    return int(np.argmax(label))


@dataclass(frozen=True)
class DataPoint:
    """A training example: position plus label vector."""
    position: np.ndarray
    label: np.ndarray

    @classmethod
    def create(cls, position: ArrayLike, label: Optional[ArrayLike] = None) -> "DataPoint":
        """Validate and freeze; a missing label aliases the position (retrieval)."""
        pos = as_vector(position)
        lab = pos if label is None else as_vector(label, what="label")
        pos.flags.writeable = False
        if lab is not pos:
            lab.flags.writeable = False
        return cls(position=pos, label=lab)

    @property
    def dimension(self) -> int:
        return int(self.position.shape[0])
