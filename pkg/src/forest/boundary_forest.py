"""
Boundary Forest

n_T Boundary Trees over one shared ExampleStore. The first n_T training
examples seed the roots (tree i is rooted at example i and then trained on
the other n_T-1 in its own random order); afterwards training is strictly
online. Queries combine the per-tree locally closest nodes: the closest one
for retrieval, a Shepard inverse-distance average for classification and
regression.
"""

import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..core.distance import LabelMetric, PositionMetric
from ..core.exceptions import DimensionMismatchError, ForestStateError, InvalidValueError
from ..core.store import ExampleStore
from ..core.types import ArrayLike, DataPoint, TaskKind, TaskMode, as_vector, label_class
from ..monitoring.metrics import MetricsCollector
from .boundary_tree import BoundaryTree, QueryStats, TrainResult

logger = logging.getLogger(__name__)

DEFAULT_TREES = 50
DEFAULT_K = 50


def shepard_estimate(results: Sequence[Tuple[ArrayLike, float]]) -> np.ndarray:
    """
    Inverse-distance weighted average of label vectors.

    When some distances are exactly zero the estimate is the plain mean of
    those labels only.
    """
    if len(results) == 0:
        raise InvalidValueError("shepard_estimate needs at least one (label, distance) pair")
    labels = np.array([np.asarray(label, dtype=np.float64) for label, _ in results])
    distances = np.array([float(d) for _, d in results], dtype=np.float64)
    if np.any(distances < 0) or not np.all(np.isfinite(distances)):
        raise InvalidValueError("distances must be finite and non-negative")
    exact = distances == 0
    if np.any(exact):
        return labels[exact].mean(axis=0)
    weights = 1.0 / distances
    return weights @ labels / weights.sum()


@dataclass
class TreeHit:
    """Per-tree query result."""
    tree: int
    node: int
    example_id: int
    distance: float


@dataclass
class Prediction:
    """
    Forest answer for one query.

    `label` holds the Shepard estimate (classification/regression); for
    retrieval `example_id` and `distance` identify the closest per-tree hit.
    """
    hits: List[TreeHit]
    label: Optional[np.ndarray] = None
    example_id: Optional[int] = None
    distance: Optional[float] = None
    stats: QueryStats = field(default_factory=QueryStats)

    @property
    def class_index(self) -> int:
        if self.label is None:
            raise ForestStateError("retrieval predictions carry no label estimate")
        return label_class(self.label)


class _SharedId:
    """Appends the current example to the store on first use; thread-safe."""

    def __init__(self, store: ExampleStore, point: DataPoint):
        self._store = store
        self._point = point
        self._id: Optional[int] = None
        self._lock = threading.Lock()

    def __call__(self) -> int:
        with self._lock:
            if self._id is None:
                self._id = self._store.append_point(self._point)
            return self._id


class BoundaryForest:
    """
    Online Boundary Forest for classification, regression and retrieval.

    All trees share the position metric, label metric, epsilon and k. Each
    tree draws its initial shuffle and its tie-breaking stream from children
    of one SeedSequence built from `seed`, so a forest is reproducible from
    (seed, parameters, input order) regardless of `threads`.
    """

    def __init__(self, mode: Optional[TaskMode] = None, n_trees: int = DEFAULT_TREES,
                 k: float = DEFAULT_K, seed: int = 0,
                 position_metric: Optional[PositionMetric] = None,
                 threads: Optional[int] = 1,
                 metrics: Optional[MetricsCollector] = None):
        if n_trees < 1:
            raise InvalidValueError(f"n_trees must be at least 1, got {n_trees}")
        if not k > 1:
            raise InvalidValueError(f"k must be greater than 1, got {k}")
        self.mode = mode or TaskMode.classification()
        self.n_trees = n_trees
        self.k = k
        self.seed = seed
        self.position_metric = position_metric or PositionMetric.euclidean()
        self.label_metric = LabelMetric.for_mode(self.mode)
        self.threads = max(1, threads if threads is not None else (os.cpu_count() or 1))
        self.metrics = metrics

        tree_seeds = np.random.SeedSequence(seed).spawn(n_trees)
        streams = [s.spawn(2) for s in tree_seeds]
        self._shuffle_rngs = [np.random.default_rng(s[0]) for s in streams]
        self._tie_rngs = [np.random.default_rng(s[1]) for s in streams]

        self.store: Optional[ExampleStore] = None
        self.trees: List[BoundaryTree] = []
        self.init_buffer: List[DataPoint] = []
        self.training_stats = QueryStats()
        self.offline_orders: List[np.ndarray] = []
        self._executor: Optional[ThreadPoolExecutor] = None

    # ------------------------------------------------------------------ state

    @property
    def initialized(self) -> bool:
        return bool(self.trees)

    @property
    def epsilon(self) -> float:
        return self.mode.epsilon

    @property
    def dimension(self) -> Optional[int]:
        if self.store is not None:
            return self.store.dimension
        if self.init_buffer:
            return self.init_buffer[0].dimension
        return None

    @property
    def stored_examples(self) -> int:
        return len(self.store) if self.store is not None else 0

    @property
    def node_count(self) -> int:
        return sum(len(tree) for tree in self.trees)

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> "BoundaryForest":
        return self

    def __exit__(self, *exc):
        self.close()

    def _map_trees(self, func: Callable[[int], object]) -> list:
        """Run func(tree_index) for every tree, in parallel when threads > 1."""
        if self.threads == 1 or self.n_trees == 1:
            return [func(i) for i in range(self.n_trees)]
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=min(self.threads, self.n_trees),
                                                thread_name_prefix="bf-tree")
        return list(self._executor.map(func, range(self.n_trees)))

    def _make_point(self, position: ArrayLike, label: Optional[ArrayLike]) -> DataPoint:
        dimension = self.dimension
        pos = as_vector(position, dimension)
        if self.mode.kind is TaskKind.RETRIEVAL:
            return DataPoint(position=pos, label=pos)
        if label is None:
            raise InvalidValueError(f"{self.mode.name} training requires a label vector")
        lab = as_vector(label, what="label")
        expected = None
        if self.store is not None:
            expected = self.store.label_dimension
        elif self.init_buffer:
            expected = self.init_buffer[0].label.shape[0]
        if expected is not None and lab.shape[0] != expected:
            raise DimensionMismatchError(expected, lab.shape[0], "label")
        return DataPoint(position=pos, label=lab)

    def _create_store(self, first: DataPoint):
        label_dimension = None if self.mode.kind is TaskKind.RETRIEVAL else first.label.shape[0]
        self.store = ExampleStore(first.dimension, label_dimension)

    def _make_tree(self, index: int, root_id: int) -> BoundaryTree:
        return BoundaryTree(self.store, root_id, k=self.k, epsilon=self.epsilon,
                            position_metric=self.position_metric,
                            label_metric=self.label_metric,
                            rng=self._tie_rngs[index])

    def _store_label(self, point: DataPoint) -> Optional[np.ndarray]:
        return None if self.store.labels_alias_positions else point.label

    # --------------------------------------------------------------- training

    def initialize(self, first_points: Sequence[DataPoint]):
        """
        Root tree i at point i, then train every tree on the remaining
        n_T-1 points in an order drawn from that tree's shuffle stream.
        """
        if self.initialized:
            raise ForestStateError("forest is already initialized")
        if len(first_points) != self.n_trees:
            raise InvalidValueError(f"initialization needs exactly {self.n_trees} points, got {len(first_points)}")
        if self.store is None:
            self._create_store(first_points[0])
        ids = [self.store.append_point(p) for p in first_points]
        self.trees = [self._make_tree(i, ids[i]) for i in range(self.n_trees)]

        def seed_tree(i: int) -> QueryStats:
            stats = QueryStats()
            others = [j for j in range(self.n_trees) if j != i]
            order = self._shuffle_rngs[i].permutation(len(others)) if others else []
            for j in order:
                point = first_points[others[j]]
                example_id = ids[others[j]]
                self.trees[i].train_validated(point.position, self._store_label(point), stats,
                                              id_provider=lambda example_id=example_id: example_id)
            return stats

        for stats in self._map_trees(seed_tree):
            self.training_stats.merge(stats)
        self.init_buffer = []
        logger.info(f"Boundary forest initialized: {self.n_trees} trees, k={self.k}, mode={self.mode.name}, "
                    f"{self.node_count} nodes")

    def train(self, position: ArrayLike, label: Optional[ArrayLike] = None) -> List[bool]:
        """
        Train every tree on one example and return the per-tree added flags.

        Until n_T examples have arrived they are buffered (the returned list is
        empty); the n_T-th example triggers initialization and its flags report
        which trees hold it once initialization is done.
        """
        started = time.perf_counter()
        point = self._make_point(position, label)
        if not self.initialized:
            self.init_buffer.append(point)
            if len(self.init_buffer) < self.n_trees:
                return []
            buffered = self.init_buffer
            before = self.training_stats.metric_comparisons
            self.initialize(buffered)
            last = len(buffered) - 1
            flags = [any(self.trees[i].example_id(n) == last for n in range(len(self.trees[i])))
                     for i in range(self.n_trees)]
            self._record_training(sum(flags), self.training_stats.metric_comparisons - before, started)
            return flags

        shared_id = _SharedId(self.store, point)
        label_vector = self._store_label(point)

        def train_tree(i: int) -> Tuple[TrainResult, QueryStats]:
            stats = QueryStats()
            result = self.trees[i].train_validated(point.position, label_vector, stats, id_provider=shared_id)
            return result, stats

        outcomes = self._map_trees(train_tree)
        comparisons = 0
        for _, stats in outcomes:
            self.training_stats.merge(stats)
            comparisons += stats.metric_comparisons
        flags = [result.added for result, _ in outcomes]
        self._record_training(sum(flags), comparisons, started)
        return flags

    def train_many(self, positions: ArrayLike, labels: Optional[ArrayLike] = None) -> int:
        """Train on rows in order; returns the number of stored examples afterwards."""
        positions = np.asarray(positions, dtype=np.float64)
        for i in range(positions.shape[0]):
            self.train(positions[i], None if labels is None else labels[i])
        return self.stored_examples

    def _record_training(self, added: int, comparisons: int, started: float):
        if self.metrics is not None:
            self.metrics.record_training(added_nodes=added, comparisons=comparisons,
                                         duration=time.perf_counter() - started,
                                         stored_examples=self.stored_examples)

    # ---------------------------------------------------------------- queries

    def query(self, position: ArrayLike) -> Prediction:
        """Combine the n_T locally closest nodes into one prediction."""
        started = time.perf_counter()
        if not self.initialized:
            prediction = self._query_buffer(position)
        else:
            y = as_vector(position, self.store.dimension)

            def query_tree(i: int) -> Tuple[TreeHit, QueryStats]:
                stats = QueryStats()
                node, dist = self.trees[i].query_with_distance(y, stats)
                return TreeHit(i, node, self.trees[i].example_id(node), dist), stats

            outcomes = self._map_trees(query_tree)
            hits = [hit for hit, _ in outcomes]
            total = QueryStats()
            for _, stats in outcomes:
                total.merge(stats)
            prediction = self.combine(hits, total)
        if self.metrics is not None:
            self.metrics.record_query(comparisons=prediction.stats.metric_comparisons,
                                      duration=time.perf_counter() - started)
        return prediction

    def _query_buffer(self, position: ArrayLike) -> Prediction:
        """Brute force over buffered points before initialization."""
        if not self.init_buffer:
            raise ForestStateError("forest has not seen any training examples")
        y = as_vector(position, self.init_buffer[0].dimension)
        rows = np.array([p.position for p in self.init_buffer])
        distances = self.position_metric.to_rows(y, rows)
        hits = [TreeHit(tree=i, node=0, example_id=i, distance=float(d)) for i, d in enumerate(distances)]
        stats = QueryStats(metric_comparisons=len(hits), path_length=len(hits))
        return self.combine(hits, stats, lambda i: self.init_buffer[i].label)

    def combine(self, hits: List[TreeHit], stats: Optional[QueryStats] = None,
                label_of: Optional[Callable[[int], np.ndarray]] = None) -> Prediction:
        """
        Merge per-tree hits: the closest hit for retrieval (ties to the lowest
        tree index), otherwise the Shepard estimate over `label_of(example_id)`,
        which defaults to the store labels.
        """
        stats = stats if stats is not None else QueryStats()
        if self.mode.kind is TaskKind.RETRIEVAL:
            best = min(hits, key=lambda h: (h.distance, h.tree))
            return Prediction(hits=hits, example_id=best.example_id, distance=best.distance, stats=stats)
        label_of = label_of or self.store.label
        estimate = shepard_estimate([(label_of(h.example_id), h.distance) for h in hits])
        return Prediction(hits=hits, label=estimate, stats=stats)

    def classify(self, position: ArrayLike) -> int:
        """Argmax class of the Shepard estimate; ties go to the lowest index."""
        if self.mode.kind is not TaskKind.CLASSIFICATION:
            raise ForestStateError(f"classify needs a classification forest, this one is {self.mode.name}")
        return self.query(position).class_index

    def estimate(self, position: ArrayLike) -> np.ndarray:
        """Shepard estimate of the label vector (classification or regression)."""
        if self.mode.kind is TaskKind.RETRIEVAL:
            raise ForestStateError("retrieval forests return example ids, use retrieve()")
        return self.query(position).label

    def retrieve(self, position: ArrayLike) -> int:
        """Id of the approximate nearest stored example."""
        if self.mode.kind is not TaskKind.RETRIEVAL:
            raise ForestStateError(f"retrieve needs a retrieval forest, this one is {self.mode.name}")
        prediction = self.query(position)
        return prediction.example_id

    # ---------------------------------------------------------------- offline

    @classmethod
    def build_offline(cls, positions: ArrayLike, labels: Optional[ArrayLike],
                      mode: Optional[TaskMode] = None, n_trees: int = DEFAULT_TREES,
                      k: float = DEFAULT_K, seed: int = 0,
                      position_metric: Optional[PositionMetric] = None,
                      threads: Optional[int] = 1,
                      metrics: Optional[MetricsCollector] = None) -> "BoundaryForest":
        """
        Offline variant: every tree sees its own full reshuffle of the data and
        is rooted at the first element of that shuffle.
        """
        forest = cls(mode=mode, n_trees=n_trees, k=k, seed=seed, position_metric=position_metric,
                     threads=threads, metrics=metrics)
        positions = np.asarray(positions, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[0] == 0:
            raise InvalidValueError("offline training needs a non-empty 2-D array of positions")
        retrieval = forest.mode.kind is TaskKind.RETRIEVAL
        if not retrieval and labels is None:
            raise InvalidValueError(f"{forest.mode.name} training requires labels")
        label_rows = None if retrieval else np.asarray(labels, dtype=np.float64)
        forest.store = ExampleStore(positions.shape[1], None if retrieval else label_rows.shape[1],
                                    capacity=positions.shape[0])
        for i in range(positions.shape[0]):
            forest.store.append(positions[i], None if retrieval else label_rows[i])
        orders = [rng.permutation(positions.shape[0]) for rng in forest._shuffle_rngs]
        forest.offline_orders = orders
        forest.trees = [forest._make_tree(i, int(orders[i][0])) for i in range(n_trees)]

        def fit_tree(i: int) -> QueryStats:
            stats = QueryStats()
            tree = forest.trees[i]
            for example_id in orders[i][1:]:
                example_id = int(example_id)
                tree.train_validated(forest.store.rows(example_id),
                                     None if retrieval else label_rows[example_id], stats,
                                     id_provider=lambda example_id=example_id: example_id)
            return stats

        for stats in forest._map_trees(fit_tree):
            forest.training_stats.merge(stats)
        logger.info(f"Offline boundary forest built on {positions.shape[0]} examples: {forest.node_count} nodes")
        return forest

    def tree_structures(self) -> List[tuple]:
        return [tree.structure() for tree in self.trees]

