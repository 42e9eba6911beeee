"""
Scaling curves: query cost as a function of the number of examples seen.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from ..core.exceptions import InvalidValueError

FLOAT_FORMAT = "%.6g"


@dataclass
class ScalingCurve:
    """
    Sequence of (N, mean metric comparisons per tree per query).

    `training_comparisons`, when present, is the cumulative number of
    comparisons spent on training (summed over trees) up to each N.
    """
    n: np.ndarray
    mean_comparisons: np.ndarray
    training_comparisons: Optional[np.ndarray] = None

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=np.float64)
        self.mean_comparisons = np.asarray(self.mean_comparisons, dtype=np.float64)
        if self.n.shape != self.mean_comparisons.shape or self.n.ndim != 1:
            raise InvalidValueError("N and mean_comparisons must be 1-D and of equal length")
        if np.any(np.diff(self.n) <= 0):
            raise InvalidValueError("N must be strictly increasing")
        if self.training_comparisons is not None:
            self.training_comparisons = np.asarray(self.training_comparisons, dtype=np.float64)
            if self.training_comparisons.shape != self.n.shape:
                raise InvalidValueError("training_comparisons must match N")

    def __len__(self) -> int:
        return int(self.n.shape[0])

    def segment(self, n_min: float = 0, n_max: float = np.inf) -> "ScalingCurve":
        """Points with n_min <= N <= n_max."""
        keep = (self.n >= n_min) & (self.n <= n_max)
        training = self.training_comparisons[keep] if self.training_comparisons is not None else None
        return ScalingCurve(self.n[keep], self.mean_comparisons[keep], training)

    def training_curve(self) -> "ScalingCurve":
        """The cumulative training cost as a curve of its own, for fitting."""
        if self.training_comparisons is None:
            raise InvalidValueError("this curve has no training column")
        return ScalingCurve(self.n, self.training_comparisons)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"N": self.n.astype(np.int64), "mean_comparisons": self.mean_comparisons})
        if self.training_comparisons is not None:
            frame["training_comparisons"] = self.training_comparisons
        return frame

    def to_csv(self, path: Union[str, Path]):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "ScalingCurve":
        frame = pd.read_csv(path)
        training = frame["training_comparisons"].to_numpy(float) if "training_comparisons" in frame else None
        return cls(frame["N"].to_numpy(float), frame["mean_comparisons"].to_numpy(float), training)


def log_checkpoints(n_min: int, n_max: int, per_decade: int = 4) -> List[int]:
    """Logarithmically spaced, strictly increasing integers from n_min to n_max inclusive."""
    if n_min < 1 or n_max < n_min:
        raise InvalidValueError(f"need 1 <= n_min <= n_max, got {n_min}, {n_max}")
    if per_decade < 1:
        raise InvalidValueError("per_decade must be >= 1")
    if n_min == n_max:
        return [int(n_min)]
    decades = np.log10(n_max) - np.log10(n_min)
    count = max(2, int(np.ceil(decades * per_decade)) + 1)
    grid = np.unique(np.round(np.logspace(np.log10(n_min), np.log10(n_max), count)).astype(np.int64))
    grid[0], grid[-1] = n_min, n_max
    return [int(n) for n in np.unique(grid)]
