"""
Shared, append-only example store.

Trees only hold integer ids into this store, so each example is kept once
no matter how many trees reference it.
"""

import logging
import threading
from typing import Optional

import numpy as np

from .exceptions import DimensionMismatchError, InvalidValueError
from .types import ArrayLike, DataPoint, as_vector

logger = logging.getLogger(__name__)


class ExampleStore:
    """
    Append-only sequence of data points with dense ids 0..count-1.

    Positions live in one contiguous float64 matrix that grows by doubling;
    `positions` returns a read-only view over the filled rows. Views handed out
    earlier keep pointing at the old buffer, which never changes, so readers
    see stable data while appends proceed. With `label_dimension=None` labels
    alias positions (retrieval).
    """

    def __init__(self, dimension: int, label_dimension: Optional[int] = None, capacity: int = 1024):
        if dimension < 1:
            raise InvalidValueError(f"dimension must be >= 1, got {dimension}")
        self.dimension = dimension
        self.label_dimension = label_dimension
        self._count = 0
        self._positions = np.empty((max(capacity, 1), dimension), dtype=np.float64)
        self._labels = (
            np.empty((max(capacity, 1), label_dimension), dtype=np.float64)
            if label_dimension is not None else None
        )
        self._lock = threading.Lock()

    @property
    def labels_alias_positions(self) -> bool:
        return self._labels is None

    def __len__(self) -> int:
        return self._count

    @property
    def count(self) -> int:
        return self._count

    def append(self, position: ArrayLike, label: Optional[ArrayLike] = None) -> int:
        """Store an example and return its fresh id."""
        pos = as_vector(position, self.dimension)
        lab = None
        if self._labels is not None:
            if label is None:
                raise InvalidValueError("this store requires a label for every example")
            lab = as_vector(label, self.label_dimension, what="label")
        with self._lock:
            if self._count == self._positions.shape[0]:
                self._grow()
            example_id = self._count
            self._positions[example_id] = pos
            if lab is not None:
                self._labels[example_id] = lab
            self._count += 1
        return example_id

    def append_point(self, point: DataPoint) -> int:
        """Store a DataPoint; its label is dropped when labels alias positions."""
        if point.dimension != self.dimension:
            raise DimensionMismatchError(self.dimension, point.dimension)
        if self._labels is not None and point.label.shape[0] != self.label_dimension:
            raise DimensionMismatchError(self.label_dimension, point.label.shape[0], "label")
        return self.append(point.position, None if self.labels_alias_positions else point.label)

    def _grow(self):
        capacity = self._positions.shape[0] * 2
        positions = np.empty((capacity, self.dimension), dtype=np.float64)
        positions[:self._count] = self._positions[:self._count]
        self._positions = positions
        if self._labels is not None:
            labels = np.empty((capacity, self.label_dimension), dtype=np.float64)
            labels[:self._count] = self._labels[:self._count]
            self._labels = labels
        logger.debug(f"Example store grown to capacity {capacity}")

    def _check_id(self, example_id: int):
        if not 0 <= example_id < self._count:
            raise IndexError(f"example id {example_id} out of range 0..{self._count - 1}")

    def position(self, example_id: int) -> np.ndarray:
        self._check_id(example_id)
        view = self._positions[example_id]
        view.flags.writeable = False
        return view

    def label(self, example_id: int) -> np.ndarray:
        if self._labels is None:
            return self.position(example_id)
        self._check_id(example_id)
        view = self._labels[example_id]
        view.flags.writeable = False
        return view

    def get(self, example_id: int) -> DataPoint:
        return DataPoint(position=self.position(example_id), label=self.label(example_id))

    @property
    def positions(self) -> np.ndarray:
        """Read-only (count, dimension) view of every stored position."""
        view = self._positions[:self._count]
        view.flags.writeable = False
        return view

    @property
    def labels(self) -> np.ndarray:
        if self._labels is None:
            return self.positions
        view = self._labels[:self._count]
        view.flags.writeable = False
        return view

    def rows(self, ids) -> np.ndarray:
        """Positions for a list of ids; callers pass ids they obtained from this store."""
        return self._positions[ids]
