"""
Evaluation protocols

Retrieval fraction, classification error rates, regression RMSE, and the
online-versus-offline regret comparison.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from ..core.config import ForestParams
from ..core.exceptions import InvalidValueError
from ..core.store import ExampleStore
from ..core.types import ArrayLike, TaskMode, one_hot
from ..forest.boundary_forest import BoundaryForest
from .oracles import RankResult, knn_classify, rank_of

logger = logging.getLogger(__name__)

Retriever = Union[BoundaryForest, Callable[[np.ndarray], int]]


def _rows(values: ArrayLike, what: str) -> np.ndarray:
    rows = np.asarray(values, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise InvalidValueError(f"{what} must be a non-empty 2-D array")
    return rows


def rank_queries(retriever: Retriever, store: ExampleStore, queries: ArrayLike) -> List[RankResult]:
    """RankResult for every query against the full contents of `store`."""
    queries = _rows(queries, "query set")
    retrieve = retriever.retrieve if isinstance(retriever, BoundaryForest) else retriever
    return [rank_of(store, q, retrieve(q), query_id=i) for i, q in enumerate(queries)]


def retrieval_fraction(retriever: Retriever, store: ExampleStore, queries: ArrayLike,
                       percentile: float = 0.99) -> float:
    """
    Smallest f such that the retriever's answer lies within the f*N closest
    stored examples for at least `percentile` of the queries.
    """
    if not 0 < percentile <= 1:
        raise InvalidValueError(f"percentile must be in (0, 1], got {percentile}")
    fractions = np.array([r.fraction for r in rank_queries(retriever, store, queries)])
    return float(np.quantile(fractions, percentile, method="inverted_cdf"))


def error_rate(forest: BoundaryForest, positions: ArrayLike, classes: ArrayLike) -> float:
    """Percentage of points whose predicted class differs from the true class."""
    positions = _rows(positions, "test set")
    classes = np.asarray(classes, dtype=np.int64)
    if classes.shape[0] != positions.shape[0]:
        raise InvalidValueError("positions and classes differ in length")
    wrong = sum(1 for y, c in zip(positions, classes) if forest.classify(y) != c)
    return 100.0 * wrong / positions.shape[0]


def training_error(forest: BoundaryForest, positions: ArrayLike, classes: ArrayLike) -> float:
    """Error rate re-querying the training set after one pass over it."""
    return error_rate(forest, positions, classes)


def regression_rmse(forest: BoundaryForest, positions: ArrayLike, targets: ArrayLike) -> float:
    """Root mean square of the Euclidean error between estimates and targets."""
    positions = _rows(positions, "test set")
    targets = np.asarray(targets, dtype=np.float64).reshape(positions.shape[0], -1)
    squared = [float(np.sum((forest.estimate(y) - t) ** 2)) for y, t in zip(positions, targets)]
    return float(np.sqrt(np.mean(squared)))


def knn_error_rate(train_positions: ArrayLike, train_classes: ArrayLike,
                   test_positions: ArrayLike, test_classes: ArrayLike, K: int = 1) -> float:
    """Error rate of the exact K-NN majority-vote baseline."""
    train_positions = _rows(train_positions, "training set")
    test_positions = _rows(test_positions, "test set")
    test_classes = np.asarray(test_classes, dtype=np.int64)
    wrong = sum(1 for y, c in zip(test_positions, test_classes)
                if knn_classify(train_positions, train_classes, y, K) != c)
    return 100.0 * wrong / test_positions.shape[0]


def indicator_labels(classes: ArrayLike, n_classes: int) -> np.ndarray:
    classes = np.asarray(classes, dtype=np.int64)
    return np.array([one_hot(int(c), n_classes) for c in classes])


def _forest_kwargs(params: ForestParams, seed: int) -> dict:
    return dict(mode=TaskMode.classification(), n_trees=params.n_trees, k=params.k,
                seed=seed, threads=params.threads)


def online_bf_error(train_positions: ArrayLike, train_classes: ArrayLike,
                    test_positions: ArrayLike, test_classes: ArrayLike, n_classes: int,
                    params: ForestParams, seed: int, shuffle: bool = True) -> float:
    """Error of an online forest trained on one (optionally shuffled) pass over the data."""
    train_positions = _rows(train_positions, "training set")
    labels = indicator_labels(train_classes, n_classes)
    if train_positions.shape[0] < params.n_trees:
        raise InvalidValueError(f"need at least n_trees={params.n_trees} training examples")
    order = np.random.default_rng(seed).permutation(train_positions.shape[0]) if shuffle \
        else np.arange(train_positions.shape[0])
    with BoundaryForest(**_forest_kwargs(params, seed)) as forest:
        forest.train_many(train_positions[order], labels[order])
        return error_rate(forest, test_positions, test_classes)


def offline_bf_error(train_positions: ArrayLike, train_classes: ArrayLike,
                     test_positions: ArrayLike, test_classes: ArrayLike, n_classes: int,
                     params: ForestParams, seed: int) -> float:
    """Error of the offline forest in which each tree sees its own full reshuffle."""
    labels = indicator_labels(train_classes, n_classes)
    with BoundaryForest.build_offline(train_positions, labels, **_forest_kwargs(params, seed)) as forest:
        return error_rate(forest, test_positions, test_classes)


@dataclass
class RegretReport:
    seeds: List[int]
    online_errors: List[float]
    offline_errors: List[float]

    @property
    def online_mean(self) -> float:
        return float(np.mean(self.online_errors))

    @property
    def offline_mean(self) -> float:
        return float(np.mean(self.offline_errors))

    @property
    def mean_gap(self) -> float:
        """Mean over seeds of |online - offline|."""
        return float(np.mean(np.abs(np.array(self.online_errors) - np.array(self.offline_errors))))

    @property
    def relative_regret(self) -> float:
        return self.mean_gap / self.online_mean if self.online_mean > 0 else 0.0

    def within_bound(self, fraction: float = 0.10, absolute: float = 0.5) -> bool:
        return self.mean_gap <= max(fraction * self.online_mean, absolute)


def regret(train_positions: ArrayLike, train_classes: ArrayLike,
           test_positions: ArrayLike, test_classes: ArrayLike, n_classes: int,
           params: ForestParams, seeds: Optional[Sequence[int]] = None) -> RegretReport:
    """Online and offline error rates over several seeds."""
    seeds = list(seeds) if seeds is not None else [params.seed + i for i in range(5)]
    report = RegretReport(seeds=seeds, online_errors=[], offline_errors=[])
    for seed in seeds:
        online = online_bf_error(train_positions, train_classes, test_positions, test_classes,
                                 n_classes, params, seed)
        offline = offline_bf_error(train_positions, train_classes, test_positions, test_classes,
                                   n_classes, params, seed)
        report.online_errors.append(online)
        report.offline_errors.append(offline)
        logger.info(f"Regret seed {seed}: online {online:.3f}% offline {offline:.3f}%")
    return report
