"""
Scaling experiments on synthetic data

Query cost as a function of N, retrieval fraction as a function of N, and
the dependence of the unbounded-k power law on dimensionality.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

from ..core.config import ForestParams
from ..core.exceptions import InvalidValueError
from ..core.types import TaskMode
from ..evaluation.protocols import retrieval_fraction
from ..forest.boundary_forest import BoundaryForest
from .curves import ScalingCurve, log_checkpoints
from .fitting import FitFamily, FitReport, fit_family
from .sources import HypercubeSource, SyntheticSource, generate

logger = logging.getLogger(__name__)


def _check_checkpoints(checkpoints: Sequence[int], n_trees: int) -> List[int]:
    checkpoints = [int(n) for n in checkpoints]
    if not checkpoints:
        raise InvalidValueError("at least one checkpoint is required")
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise InvalidValueError("checkpoints must be strictly increasing")
    if checkpoints[0] < n_trees:
        raise InvalidValueError(f"first checkpoint {checkpoints[0]} is below n_trees={n_trees}")
    return checkpoints


def _retrieval_forest(params: ForestParams, seed: int) -> BoundaryForest:
    return BoundaryForest(mode=TaskMode.retrieval(), n_trees=params.n_trees, k=params.k,
                          seed=seed, threads=params.threads)


def measure_scaling(params: ForestParams, source: SyntheticSource, checkpoints: Sequence[int],
                    queries_per_checkpoint: int = 200, seed: Optional[int] = None) -> ScalingCurve:
    """
    Train a retrieval forest incrementally and, at every checkpoint, measure
    the mean comparisons per tree per held-out query.
    """
    checkpoints = _check_checkpoints(checkpoints, params.n_trees)
    if queries_per_checkpoint < 1:
        raise InvalidValueError("queries_per_checkpoint must be >= 1")
    seed = params.seed if seed is None else seed
    data = generate(source, checkpoints[-1], stream=0)
    queries = generate(source, queries_per_checkpoint, stream=1)

    means, training = [], []
    with _retrieval_forest(params, seed) as forest:
        trained = 0
        for n in checkpoints:
            forest.train_many(data[trained:n])
            trained = n
            total = sum(forest.query(q).stats.metric_comparisons for q in queries)
            means.append(total / (params.n_trees * len(queries)))
            training.append(forest.training_stats.metric_comparisons)
            logger.info(f"Scaling checkpoint N={n}: {means[-1]:.2f} comparisons per tree per query")
    return ScalingCurve(checkpoints, means, training)


@dataclass
class RetrievalPoint:
    n: int
    fraction: float


def retrieval_curve(params: ForestParams, source: SyntheticSource, checkpoints: Sequence[int],
                    queries: int = 200, percentile: float = 0.99,
                    seed: Optional[int] = None) -> List[RetrievalPoint]:
    """Retrieval fraction f at each checkpoint, with held-out queries from the same source."""
    checkpoints = _check_checkpoints(checkpoints, params.n_trees)
    seed = params.seed if seed is None else seed
    data = generate(source, checkpoints[-1], stream=0)
    query_points = generate(source, queries, stream=1)

    points = []
    with _retrieval_forest(params, seed) as forest:
        trained = 0
        for n in checkpoints:
            forest.train_many(data[trained:n])
            trained = n
            f = retrieval_fraction(forest, forest.store, query_points, percentile)
            points.append(RetrievalPoint(n, f))
            logger.info(f"Retrieval checkpoint N={n}: f={f:.6g}")
    return points


@dataclass
class DimensionFit:
    dimension: int
    alpha: float
    report: FitReport
    curve: ScalingCurve


def dimension_sweep(dimensions: Sequence[int], n: int, seed: int = 0, n_min: int = 100,
                    per_decade: int = 4, queries: int = 100) -> List[DimensionFit]:
    """
    For each D, train a single unbounded tree on hypercube data and fit the
    power law of its query cost over the whole curve.
    """
    params = ForestParams(mode="retrieval", n_trees=1, k=math.inf, seed=seed, threads=1)
    checkpoints = log_checkpoints(n_min, n, per_decade)
    results = []
    for dimension in dimensions:
        if dimension < 1:
            raise InvalidValueError(f"dimension must be >= 1, got {dimension}")
        curve = measure_scaling(params, HypercubeSource(dimension, seed), checkpoints, queries, seed)
        report = fit_family(curve, FitFamily.POWER, fit_fraction=1.0)
        alpha = report.coefficients.get("alpha", float("nan"))
        results.append(DimensionFit(dimension, alpha, report, curve))
        logger.info(f"Dimension sweep D={dimension}: alpha={alpha:.4f}")
    return results

