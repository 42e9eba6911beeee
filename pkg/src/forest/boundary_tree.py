"""
Boundary Tree

A rooted tree whose nodes point at examples in a shared ExampleStore.
Queries descend greedily towards the query point and stop at a locally
closest node; training adds the example under that node only when the
node's label disagrees with the example's label.
"""

import logging
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..core.distance import LabelMetric, LabelMetricKind, PositionMetric
from ..core.exceptions import ForestStateError, InvalidValueError
from ..core.store import ExampleStore
from ..core.types import ArrayLike, as_vector

logger = logging.getLogger(__name__)

IdProvider = Callable[[], int]


@dataclass
class BTNode:
    """A tree node; `children` holds node indices, always created after this node."""
    example_id: int
    children: List[int] = field(default_factory=list)


@dataclass
class QueryStats:
    """Metric-comparison and path counters for scaling experiments."""
    metric_comparisons: int = 0
    path_length: int = 0

    def merge(self, other: "QueryStats"):
        self.metric_comparisons += other.metric_comparisons
        self.path_length += other.path_length


@dataclass
class TrainResult:
    added: bool
    parent: int  # v_min, the locally closest node found by the query
    node: Optional[int] = None  # new node index when added


@dataclass
class TreeShape:
    depth_histogram: Counter
    fanout_histogram: Counter

    @property
    def max_depth(self) -> int:
        return max(self.depth_histogram)

    @property
    def max_fanout(self) -> int:
        return max(self.fanout_histogram)


class BoundaryTree:
    """
    A single Boundary Tree over a shared example store.

    `k` is the child cap (math.inf for none); a node holding k children is
    never a stopping point, so queries always end at a node that can accept
    a new child. Ties in the greedy argmin are broken with this tree's own
    generator, which is the only source of randomness.
    """

    def __init__(self, store: ExampleStore, root_id: int, k: float = 50,
                 epsilon: float = 0.0,
                 position_metric: Optional[PositionMetric] = None,
                 label_metric: Optional[LabelMetric] = None,
                 rng: Optional[np.random.Generator] = None,
                 seed: Optional[int] = None):
        if not k > 1:
            raise InvalidValueError(f"k must be greater than 1, got {k}")
        if math.isfinite(k) and k != int(k):
            raise InvalidValueError(f"k must be an integer or infinite, got {k}")
        if epsilon < 0:
            raise InvalidValueError(f"epsilon must be >= 0, got {epsilon}")
        if not 0 <= root_id < len(store):
            raise InvalidValueError(f"root id {root_id} is not in the store")
        self.store = store
        self.k = k
        self.epsilon = epsilon
        self.position_metric = position_metric or PositionMetric.euclidean()
        self.label_metric = label_metric or LabelMetric(LabelMetricKind.ALWAYS_FAR)
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.nodes: List[BTNode] = [BTNode(example_id=root_id)]

    @property
    def root(self) -> int:
        return 0

    def __len__(self) -> int:
        return len(self.nodes)

    def example_id(self, node_index: int) -> int:
        return self.nodes[node_index].example_id

    def _argmin(self, distances: np.ndarray) -> int:
        best = distances.min()
        ties = np.flatnonzero(distances == best)
        if ties.shape[0] == 1:
            return int(ties[0])
        return int(ties[self.rng.integers(ties.shape[0])])

    def query_with_distance(self, y: np.ndarray, stats: QueryStats) -> Tuple[int, float]:
        """
        Greedy descent; returns (locally closest node, its distance to y).

        `y` must already be a validated position. One comparison is counted per
        candidate at each visited node: every child, plus the node itself when it
        has room for another child. The node's own distance is carried over from
        the step that selected it.
        """
        if not self.nodes:
            raise ForestStateError("cannot query an empty tree")
        nodes = self.nodes
        metric = self.position_metric
        v = 0
        d_v = None
        while True:
            stats.path_length += 1
            children = nodes[v].children
            open_node = len(children) < self.k
            if open_node and d_v is None:
                d_v = metric.pair(self.store.rows(nodes[v].example_id), y)
            if not children:
                stats.metric_comparisons += 1
                return v, d_v
            ids = [nodes[c].example_id for c in children]
            child_distances = metric.to_rows(y, self.store.rows(ids))
            if open_node:
                stats.metric_comparisons += len(children) + 1
                candidates = np.append(child_distances, d_v)
            else:
                stats.metric_comparisons += len(children)
                candidates = child_distances
            choice = self._argmin(candidates)
            if choice == len(children):
                return v, d_v
            v = children[choice]
            d_v = float(child_distances[choice])

    def query(self, y: ArrayLike, stats: Optional[QueryStats] = None) -> int:
        """Locally closest node to y."""
        position = as_vector(y, self.store.dimension)
        node, _ = self.query_with_distance(position, stats if stats is not None else QueryStats())
        return node

    def train(self, y: ArrayLike, label: Optional[ArrayLike] = None,
              stats: Optional[QueryStats] = None,
              id_provider: Optional[IdProvider] = None) -> TrainResult:
        """
        Query with y and attach (y, label) under the locally closest node when
        the label metric says that node's label is more than epsilon away.

        `id_provider` returns the store id of the example, appending it the first
        time it is called; the forest shares one provider across its trees so an
        example is stored at most once. Without a provider the example is
        appended to the store directly.
        """
        position = as_vector(y, self.store.dimension)
        label_vector = None
        if label is not None and not self.store.labels_alias_positions:
            label_vector = as_vector(label, self.store.label_dimension, what="label")
        return self.train_validated(position, label_vector, stats if stats is not None else QueryStats(), id_provider)

    def train_validated(self, position: np.ndarray, label: Optional[np.ndarray],
                        stats: QueryStats, id_provider: Optional[IdProvider] = None) -> TrainResult:
        v_min, _ = self.query_with_distance(position, stats)
        if not self.label_metric.always_far:
            if label is None:
                raise InvalidValueError("a label is required unless the label metric is always-far")
            node_label = self.store.label(self.nodes[v_min].example_id)
            if not self.label_metric.pair(label, node_label).exceeds(self.epsilon):
                return TrainResult(added=False, parent=v_min)
        example_id = id_provider() if id_provider is not None else self.store.append(position, label)
        node = self._link(v_min, example_id)
        return TrainResult(added=True, parent=v_min, node=node)

    def _link(self, parent: int, example_id: int) -> int:
        siblings = self.nodes[parent].children
        if len(siblings) >= self.k:
            raise ForestStateError(f"node {parent} already has {len(siblings)} children")
        node = len(self.nodes)
        self.nodes.append(BTNode(example_id=example_id))
        siblings.append(node)
        return node

    def depth_and_fanout(self) -> TreeShape:
        """Exact histograms of node depths and child counts."""
        depths: Counter = Counter()
        fanouts: Counter = Counter()
        queue = deque([(0, 0)])
        while queue:
            node, depth = queue.popleft()
            depths[depth] += 1
            children = self.nodes[node].children
            fanouts[len(children)] += 1
            queue.extend((child, depth + 1) for child in children)
        return TreeShape(depth_histogram=depths, fanout_histogram=fanouts)

    def structure(self) -> Tuple[Tuple[int, Tuple[int, ...]], ...]:
        """Hashable description of the tree (example ids and child lists)."""
        return tuple((node.example_id, tuple(node.children)) for node in self.nodes)

    def root_fanout(self) -> int:
        return len(self.nodes[0].children)
