"""
Exact ground-truth oracles

Brute-force K nearest neighbours, ranks of a returned example among all
stored examples, and the K-NN majority-vote baseline classifier.
"""

from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from ..core.distance import PositionMetric
from ..core.exceptions import InvalidValueError
from ..core.store import ExampleStore
from ..core.types import ArrayLike, as_vector

Examples = Union[ExampleStore, np.ndarray]


@dataclass(frozen=True)
class Neighbor:
    example_id: int
    distance: float


@dataclass(frozen=True)
class RankResult:
    """Where a returned example falls among all examples ordered by distance to the query."""
    query_id: int
    returned_id: int
    rank: int
    fraction: float


def _positions(examples: Examples) -> np.ndarray:
    if isinstance(examples, ExampleStore):
        return examples.positions
    positions = np.asarray(examples, dtype=np.float64)
    if positions.ndim != 2:
        raise InvalidValueError("examples must be a store or a 2-D array")
    return positions


def all_distances(examples: Examples, y: ArrayLike, metric: Optional[PositionMetric] = None) -> np.ndarray:
    positions = _positions(examples)
    metric = metric or PositionMetric.euclidean()
    return metric.to_rows(as_vector(y, positions.shape[1]), positions)


def brute_knn(examples: Examples, y: ArrayLike, K: int,
              metric: Optional[PositionMetric] = None) -> List[Neighbor]:
    """Exact K nearest neighbours, ascending by distance, ties to the lower id."""
    positions = _positions(examples)
    count = positions.shape[0]
    if count == 0:
        raise InvalidValueError("brute_knn needs a non-empty set of examples")
    if not 1 <= K <= count:
        raise InvalidValueError(f"K must be in 1..{count}, got {K}")
    distances = all_distances(positions, y, metric)
    order = np.lexsort((np.arange(count), distances))[:K]
    return [Neighbor(int(i), float(distances[i])) for i in order]


def brute_force_retriever(examples: Examples, metric: Optional[PositionMetric] = None):
    """A retriever returning the exact nearest example id; the reference for retrieval fractions."""
    def retrieve(y: ArrayLike) -> int:
        return brute_knn(examples, y, 1, metric)[0].example_id
    return retrieve


def rank_of(examples: Examples, y: ArrayLike, returned_id: int, query_id: int = 0,
            metric: Optional[PositionMetric] = None) -> RankResult:
    """
    Rank of `returned_id` among all examples sorted by distance to y.

    Equidistant examples share the best rank, so duplicates of the returned
    point never count against it.
    """
    distances = all_distances(examples, y, metric)
    count = distances.shape[0]
    if not 0 <= returned_id < count:
        raise InvalidValueError(f"returned id {returned_id} is not a stored example")
    rank = int(np.count_nonzero(distances < distances[returned_id])) + 1
    return RankResult(query_id=query_id, returned_id=returned_id, rank=rank, fraction=rank / count)


def knn_classify(positions: ArrayLike, classes: ArrayLike, y: ArrayLike, K: int,
                 metric: Optional[PositionMetric] = None) -> int:
    """
    Majority vote among the K nearest examples; a tied vote goes to the
    tied class whose member is closest to y.
    """
    classes = np.asarray(classes, dtype=np.int64)
    neighbors = brute_knn(np.asarray(positions, dtype=np.float64), y, K, metric)
    votes = {}
    for neighbor in neighbors:
        label = int(classes[neighbor.example_id])
        votes[label] = votes.get(label, 0) + 1
    best = max(votes.values())
    nearest_first = (int(classes[n.example_id]) for n in neighbors)
    return next(label for label in nearest_first if votes[label] == best)
