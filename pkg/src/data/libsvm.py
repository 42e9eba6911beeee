"""
LIBSVM sparse dataset loader

Reads `label idx:val idx:val ...` text files (1-based, strictly increasing
indices) into dense float64 matrices; missing indices are zero.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import DatasetFormatError, InvalidValueError
from ..core.types import TaskKind, one_hot

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class LibsvmDataset:
    """
    Dense view of a LIBSVM file.

    For classification `classes` holds 0-based class indices into
    `class_values` (the distinct file labels, ascending); for regression the
    targets are the raw numeric labels.
    """
    path: str
    positions: np.ndarray
    targets: np.ndarray
    dimension: int
    classes: Optional[np.ndarray] = None
    class_values: Optional[List[float]] = None

    def __len__(self) -> int:
        return int(self.positions.shape[0])

    @property
    def n_classes(self) -> int:
        return len(self.class_values) if self.class_values is not None else 0

    def label_vectors(self) -> np.ndarray:
        """Indicator vectors for classification, one-column targets for regression."""
        if self.classes is not None:
            return np.array([one_hot(int(c), self.n_classes) for c in self.classes])
        return self.targets.reshape(-1, 1)

    def reordered(self, order: np.ndarray) -> "LibsvmDataset":
        return LibsvmDataset(
            path=self.path,
            positions=self.positions[order],
            targets=self.targets[order],
            dimension=self.dimension,
            classes=self.classes[order] if self.classes is not None else None,
            class_values=self.class_values,
        )


def _parse_line(text: str, path: PathLike, line_number: int) -> Tuple[float, List[int], List[float]]:
    tokens = text.split()
    try:
        label = float(tokens[0])
    except ValueError:
        raise DatasetFormatError(f"non-numeric label '{tokens[0]}'", path, line_number)
    if not math.isfinite(label):
        raise DatasetFormatError(f"label '{tokens[0]}' is not finite", path, line_number)

    indices: List[int] = []
    values: List[float] = []
    for token in tokens[1:]:
        index_text, sep, value_text = token.partition(":")
        if not sep:
            raise DatasetFormatError(f"feature '{token}' is not of the form idx:val", path, line_number)
        try:
            index = int(index_text)
            value = float(value_text)
        except ValueError:
            raise DatasetFormatError(f"feature '{token}' is not of the form idx:val", path, line_number)
        if index < 1:
            raise DatasetFormatError(f"feature index {index} must be >= 1", path, line_number)
        if indices and index <= indices[-1]:
            raise DatasetFormatError(f"feature indices must be strictly increasing ({indices[-1]} then {index})",
                                     path, line_number)
        if not math.isfinite(value):
            raise DatasetFormatError(f"feature {index} has non-finite value '{value_text}'", path, line_number)
        indices.append(index)
        values.append(value)
    return label, indices, values


def load_libsvm(path: PathLike, dimension: Optional[int] = None, task: str = "classification",
                class_values: Optional[Sequence[float]] = None) -> LibsvmDataset:
    """
    Load a LIBSVM file.

    `dimension` defaults to the largest feature index seen. Passing the
    training set's `class_values` maps a test file onto the same class indices;
    a label outside that set is an error.
    """
    kind = TaskKind(task)
    labels: List[float] = []
    rows: List[Tuple[List[int], List[float]]] = []
    line_numbers: List[int] = []
    max_index = 0

    with open(path, "r") as f:
        for line_number, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            label, indices, values = _parse_line(text, path, line_number)
            if indices:
                if dimension is not None and indices[-1] > dimension:
                    raise DatasetFormatError(f"feature index {indices[-1]} exceeds dimension {dimension}",
                                             path, line_number)
                max_index = max(max_index, indices[-1])
            labels.append(label)
            rows.append((indices, values))
            line_numbers.append(line_number)

    if not rows:
        raise DatasetFormatError("file contains no examples", path)
    dimension = dimension if dimension is not None else max_index
    if dimension < 1:
        raise DatasetFormatError("could not infer a dimension (no features present)", path)

    positions = np.zeros((len(rows), dimension), dtype=np.float64)
    for i, (indices, values) in enumerate(rows):
        if indices:
            positions[i, np.asarray(indices) - 1] = values
    targets = np.asarray(labels, dtype=np.float64)

    dataset = LibsvmDataset(path=str(path), positions=positions, targets=targets, dimension=dimension)
    if kind is TaskKind.CLASSIFICATION:
        values = sorted(set(labels)) if class_values is None else [float(v) for v in class_values]
        lookup = {value: i for i, value in enumerate(values)}
        classes = np.empty(len(labels), dtype=np.int64)
        for i, label in enumerate(labels):
            if label not in lookup:
                raise DatasetFormatError(f"label {label:g} does not occur in the training classes",
                                         path, line_numbers[i])
            classes[i] = lookup[label]
        dataset.classes = classes
        dataset.class_values = values

    logger.info(f"Loaded {len(dataset)} rows x {dimension} features from {path}"
                + (f", {dataset.n_classes} classes" if dataset.classes is not None else ""))
    return dataset


def _format_number(value: float) -> str:
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def write_libsvm(path: PathLike, positions: np.ndarray, labels: Sequence[float]):
    """Write dense rows as LIBSVM text; zero coordinates are omitted."""
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[0] != len(labels):
        raise InvalidValueError("positions must be 2-D with one row per label")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for row, label in zip(positions, labels):
            features = " ".join(f"{i + 1}:{_format_number(v)}" for i, v in enumerate(row) if v != 0)
            f.write(f"{_format_number(label)} {features}".rstrip() + "\n")


def minmax_scale(train: np.ndarray, *others: np.ndarray) -> Tuple[np.ndarray, ...]:
    """Scale every feature to [0, 1] using the training range; constant features become 0."""
    low = train.min(axis=0)
    span = train.max(axis=0) - low
    safe = np.where(span > 0, span, 1.0)

    def scale(matrix: np.ndarray) -> np.ndarray:
        scaled = (matrix - low) / safe
        scaled[:, span == 0] = 0.0
        return scaled

    return tuple(scale(m) for m in (train,) + others)
