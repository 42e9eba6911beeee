"""
Artificial Boundary Tree

Metric-free model of a Boundary Tree in which every point is equidistant
from every other. At a node with q children the insertion stops there with
probability 1/(q+1) and otherwise descends to a uniformly chosen child; a
node with k children cannot be stopped at and always descends.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..core.exceptions import InvalidValueError
from .curves import ScalingCurve, log_checkpoints

logger = logging.getLogger(__name__)

_UNIFORM_BATCH = 1 << 16


@dataclass
class ArtificialTreeResult:
    curve: ScalingCurve
    fanout_histogram: Counter
    root_fanout: int
    max_fanout: int
    node_count: int
    costs: np.ndarray  # comparisons spent by each insertion

    def sqrt_law_ratio(self) -> float:
        """Last curve point divided by sqrt(2N)."""
        return float(self.curve.mean_comparisons[-1] / math.sqrt(2 * self.curve.n[-1]))


class _UniformStream:
    """Uniform [0, 1) draws from a numpy generator, fetched in batches."""

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._buffer: List[float] = []
        self._pos = 0

    def next(self) -> float:
        if self._pos == len(self._buffer):
            self._buffer = self._rng.random(_UNIFORM_BATCH).tolist()
            self._pos = 0
        value = self._buffer[self._pos]
        self._pos += 1
        return value


def trailing_means(costs: np.ndarray, checkpoints: Sequence[int], window: float) -> np.ndarray:
    """Mean insertion cost over (1-window)*N < n <= N for every checkpoint N."""
    means = []
    for n in checkpoints:
        lo = min(int(math.floor((1.0 - window) * n)), n - 1)
        means.append(float(costs[lo:n].mean()))
    return np.array(means)


def artificial_tree_sim(n: int, k: float = math.inf, seed: int = 0,
                        checkpoints: Optional[Sequence[int]] = None,
                        window: float = 0.02, per_decade: int = 4) -> ArtificialTreeResult:
    """
    Insert n points into the artificial tree.

    The cost of an insertion is counted like a real query: at every visited
    node, one comparison per child plus one for the node itself when it is
    not full.
    """
    if n < 1:
        raise InvalidValueError(f"n must be >= 1, got {n}")
    if not k > 1:
        raise InvalidValueError(f"k must be greater than 1, got {k}")
    if not 0 < window <= 1:
        raise InvalidValueError(f"window must be in (0, 1], got {window}")
    checkpoints = list(checkpoints) if checkpoints is not None else log_checkpoints(1, n, per_decade)
    if checkpoints[-1] > n:
        raise InvalidValueError(f"checkpoint {checkpoints[-1]} exceeds n={n}")

    uniforms = _UniformStream(np.random.default_rng(seed))
    children: List[List[int]] = [[]]
    costs = np.empty(n, dtype=np.int64)

    for i in range(n):
        v = 0
        cost = 0
        while True:
            kids = children[v]
            q = len(kids)
            if q < k:
                cost += q + 1
                j = int(uniforms.next() * (q + 1))
                if j >= q:
                    break
            else:
                cost += q
                j = min(int(uniforms.next() * q), q - 1)
            v = kids[j]
        children[v].append(len(children))
        children.append([])
        costs[i] = cost

    fanouts = Counter(len(c) for c in children)
    curve = ScalingCurve(checkpoints, trailing_means(costs, checkpoints, window))
    logger.info(f"Artificial tree: N={n}, k={k}, root fanout {len(children[0])}, "
                f"tail cost {curve.mean_comparisons[-1]:.1f}")
    return ArtificialTreeResult(curve=curve, fanout_histogram=fanouts, root_fanout=len(children[0]),
                                max_fanout=max(fanouts), node_count=len(children), costs=costs)


_NO_WALKS = np.empty(0, dtype=np.int64)


@dataclass
class _Subtree:
    arrivals: np.ndarray  # insertions reaching this node, per interval between checkpoints
    walks: List[np.ndarray]  # query walks reaching this node, per checkpoint


def _expand(subtree: _Subtree, k: float, rng: np.random.Generator, totals: np.ndarray) -> List[_Subtree]:
    """
    Replay one node: count the walks' comparisons into `totals` and return the
    children that at least one walk descends into.

    While the node has q < k children, the number of arrivals up to and
    including the next one that stops here is geometric with p = 1/(q+1); the
    arrivals passing before it spread uniformly over the q children. Once the
    node is full every arrival is spread over its k children.
    """
    batches = subtree.arrivals.shape[0]
    capacity = int(k) if math.isfinite(k) else 16
    routed = np.zeros((capacity, batches), dtype=np.int64)
    reached: Dict[int, List[np.ndarray]] = {}
    q = 0
    for j in range(batches):
        remaining = int(subtree.arrivals[j])
        while remaining and q < k:
            gap = int(rng.geometric(1.0 / (q + 1)))
            if gap > remaining:
                break
            if gap > 1:
                routed[:q, j] += rng.multinomial(gap - 1, np.full(q, 1.0 / q))
            if q == routed.shape[0]:
                routed = np.vstack([routed, np.zeros_like(routed)])
            q += 1
            remaining -= gap
        if remaining:
            routed[:q, j] += rng.multinomial(remaining, np.full(q, 1.0 / q))

        walks = subtree.walks[j]
        if walks.shape[0] == 0:
            continue
        full = q >= k
        totals[j, walks] += q if full else q + 1
        choice = rng.integers(q if full else q + 1, size=walks.shape[0])
        moving = choice < q
        order = np.argsort(choice[moving], kind="stable")
        targets, descending = choice[moving][order], walks[moving][order]
        children, starts = np.unique(targets, return_index=True)
        for child, group in zip(children.tolist(), np.split(descending, starts[1:])):
            reached.setdefault(child, [_NO_WALKS] * batches)[j] = group

    return [_Subtree(arrivals=routed[child].copy(), walks=walks) for child, walks in sorted(reached.items())]


def artificial_query_curve(n: int, k: float = math.inf, seed: int = 0,
                           checkpoints: Optional[Sequence[int]] = None,
                           queries: int = 64, per_decade: int = 4) -> ScalingCurve:
    """
    Mean query cost of the artificial tree at each checkpoint, for horizons far
    beyond what `artificial_tree_sim` can insert one by one.

    After the checkpoint's last insertion, `queries` walks descend with the
    insertion rule but leave the tree unchanged; each walk's cost is sampled
    from the same law as the cost of the next insertion. Only nodes that some
    walk visits are replayed, each from the number of insertions its parent
    routed to it, so the work grows with the number of walks rather than n.
    """
    if n < 1:
        raise InvalidValueError(f"n must be >= 1, got {n}")
    if not k > 1:
        raise InvalidValueError(f"k must be greater than 1, got {k}")
    if queries < 1:
        raise InvalidValueError(f"queries must be >= 1, got {queries}")
    checkpoints = list(checkpoints) if checkpoints is not None else log_checkpoints(1, n, per_decade)
    if checkpoints[0] < 1 or checkpoints[-1] > n:
        raise InvalidValueError(f"checkpoints must lie in 1..{n}")

    arrivals = np.diff(np.asarray([0] + checkpoints, dtype=np.int64))
    if np.any(arrivals <= 0):
        raise InvalidValueError("checkpoints must be strictly increasing")
    rng = np.random.default_rng(seed)
    totals = np.zeros((len(checkpoints), queries), dtype=np.int64)
    pending = [_Subtree(arrivals=arrivals, walks=[np.arange(queries)] * len(checkpoints))]
    expanded = 0
    while pending:
        subtree = pending.pop()
        pending.extend(reversed(_expand(subtree, k, rng, totals)))
        expanded += 1

    curve = ScalingCurve(checkpoints, totals.mean(axis=1))
    logger.info(f"Artificial tree walks: N={n}, k={k}, {queries} walks per checkpoint, "
                f"{expanded} nodes replayed, tail cost {curve.mean_comparisons[-1]:.1f}")
    return curve
