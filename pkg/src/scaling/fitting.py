"""
Scaling-law fits and the rule for choosing between two of them.

Each family is fitted by linear least squares in its linearized form on the
first half of a curve; the rms error is then measured over the whole curve.
One family is declared the winner only when its rms error is at least
`threshold` times smaller than the rival's.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

import numpy as np

from ..core.exceptions import InvalidValueError
from .curves import ScalingCurve

logger = logging.getLogger(__name__)

MIN_POINTS = 6
DEFAULT_THRESHOLD = 5.0


class FitFamily(Enum):
    POWER = "power"                # a * N^alpha
    LOGARITHMIC = "logarithmic"    # a * log N + b
    QUADRATIC = "quadratic"        # a * N^2 + b * N + c
    LINEARITHMIC = "linearithmic"  # a * (N log N - N)


@dataclass
class FitReport:
    family: FitFamily
    coefficients: Dict[str, float]
    rms: float
    rms_ratio: float = float("nan")  # rival rms / own rms, set by fit_and_select
    fit_points: int = 0

    def predict(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.float64)
        c = self.coefficients
        if self.family is FitFamily.POWER:
            return c["a"] * np.power(n, c["alpha"])
        if self.family is FitFamily.LOGARITHMIC:
            return c["a"] * np.log(n) + c["b"]
        if self.family is FitFamily.QUADRATIC:
            return c["a"] * n ** 2 + c["b"] * n + c["c"]
        return c["a"] * (n * np.log(n) - n)

    def describe(self) -> str:
        coefficients = " ".join(f"{k}={v:.6g}" for k, v in self.coefficients.items())
        return f"{self.family.value}: {coefficients} rms={self.rms:.6g}"


@dataclass
class Selection:
    report_a: FitReport
    report_b: FitReport
    winner: Optional[FitFamily]
    threshold: float = DEFAULT_THRESHOLD

    @property
    def verdict(self) -> str:
        return self.winner.value if self.winner is not None else "inconclusive"

    def as_key_values(self) -> Dict[str, str]:
        values = {"verdict": self.verdict, "threshold": f"{self.threshold:.6g}"}
        for prefix, report in (("fit_a", self.report_a), ("fit_b", self.report_b)):
            values[f"{prefix}_family"] = report.family.value
            values[f"{prefix}_rms"] = f"{report.rms:.6g}"
            values[f"{prefix}_rms_ratio"] = f"{report.rms_ratio:.6g}"
            for name, value in report.coefficients.items():
                values[f"{prefix}_{name}"] = f"{value:.6g}"
        return values


def _fit_coefficients(family: FitFamily, n: np.ndarray, y: np.ndarray) -> Optional[Dict[str, float]]:
    if family is FitFamily.POWER:
        if np.any(y <= 0):
            return None
        alpha, log_a = np.polyfit(np.log(n), np.log(y), 1)
        return {"a": float(np.exp(log_a)), "alpha": float(alpha)}
    if family is FitFamily.LOGARITHMIC:
        a, b = np.polyfit(np.log(n), y, 1)
        return {"a": float(a), "b": float(b)}
    if family is FitFamily.QUADRATIC:
        a, b, c = np.polyfit(n, y, 2)
        return {"a": float(a), "b": float(b), "c": float(c)}
    basis = n * np.log(n) - n
    denominator = float(basis @ basis)
    if denominator == 0:
        return None
    return {"a": float(basis @ y / denominator)}


def fit_family(curve: ScalingCurve, family: FitFamily, fit_fraction: float = 0.5) -> FitReport:
    """Fit on the leading `fit_fraction` of the curve, rms over all of it."""
    minimum = 3 if family is FitFamily.QUADRATIC else 2
    count = len(curve)
    fit_points = min(count, max(minimum, int(math.ceil(count * fit_fraction))))
    if count < minimum:
        raise InvalidValueError(f"{family.value} fit needs at least {minimum} points")
    coefficients = _fit_coefficients(family, curve.n[:fit_points], curve.mean_comparisons[:fit_points])
    if coefficients is None:
        return FitReport(family, {}, rms=float("inf"), fit_points=fit_points)
    report = FitReport(family, coefficients, rms=0.0, fit_points=fit_points)
    residuals = report.predict(curve.n) - curve.mean_comparisons
    report.rms = float(np.sqrt(np.mean(residuals ** 2)))
    return report


def _ratio(rival: float, own: float) -> float:
    if own == 0:
        return 1.0 if rival == 0 else float("inf")
    return rival / own


def fit_and_select(curve: ScalingCurve, family_a: FitFamily, family_b: FitFamily,
                   threshold: float = DEFAULT_THRESHOLD, fit_fraction: float = 0.5) -> Selection:
    """Fit both families and pick one only if its rms is `threshold` times smaller."""
    if len(curve) < MIN_POINTS:
        raise InvalidValueError(f"fit_and_select needs at least {MIN_POINTS} points, got {len(curve)}")
    report_a = fit_family(curve, family_a, fit_fraction)
    report_b = fit_family(curve, family_b, fit_fraction)
    report_a.rms_ratio = _ratio(report_b.rms, report_a.rms)
    report_b.rms_ratio = _ratio(report_a.rms, report_b.rms)

    y = curve.mean_comparisons
    scale = max(float(np.max(np.abs(y))), 1.0)
    degenerate = float(np.ptp(y)) <= 1e-12 * scale
    both_exact = max(report_a.rms, report_b.rms) <= 1e-12 * scale

    winner = None
    if not degenerate and not both_exact:
        if report_a.rms_ratio >= threshold:
            winner = family_a
        elif report_b.rms_ratio >= threshold:
            winner = family_b
    selection = Selection(report_a, report_b, winner, threshold)
    logger.debug(f"Fit selection {family_a.value} vs {family_b.value}: {selection.verdict}")
    return selection
