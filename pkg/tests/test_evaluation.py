"""
Tests for the exact oracles and the evaluation protocols.
"""

import math

import numpy as np
import pytest

from src.core.config import ForestParams
from src.core.exceptions import InvalidValueError
from src.core.store import ExampleStore
from src.core.types import TaskMode, one_hot
from src.evaluation.oracles import brute_force_retriever, brute_knn, knn_classify, rank_of
from src.evaluation.protocols import (
    RegretReport,
    error_rate,
    indicator_labels,
    knn_error_rate,
    offline_bf_error,
    online_bf_error,
    rank_queries,
    regression_rmse,
    regret,
    retrieval_fraction,
    training_error,
)
from src.forest.boundary_forest import BoundaryForest


def store_of(points) -> ExampleStore:
    points = np.asarray(points, dtype=np.float64)
    store = ExampleStore(points.shape[1])
    for point in points:
        store.append(point)
    return store


def separated(n, seed, n_classes=3):
    """Classes far apart relative to their spread."""
    rng = np.random.default_rng(seed)
    classes = rng.integers(0, n_classes, size=n)
    positions = classes[:, None] * 10.0 + rng.normal(scale=0.5, size=(n, 2))
    return positions, classes


class TestBruteKnn:
    """Test the exact nearest-neighbour oracle."""

    def test_nearest(self):
        """Test the single nearest example."""
        neighbors = brute_knn(store_of([[0.0], [1.0], [2.0]]), [0.9], 1)
        assert [n.example_id for n in neighbors] == [1]
        assert neighbors[0].distance == pytest.approx(0.1)

    def test_all_sorted(self):
        """Test that K = count returns every id by increasing distance."""
        neighbors = brute_knn(store_of([[0.0], [1.0], [2.0]]), [0.9], 3)
        assert [n.example_id for n in neighbors] == [1, 0, 2]

    def test_ties_go_to_lower_id(self):
        """Test ordering among equidistant examples."""
        neighbors = brute_knn(np.array([[2.0], [0.0], [5.0]]), [1.0], 2)
        assert [n.example_id for n in neighbors] == [0, 1]

    def test_nearest_matches_direct_scan(self):
        """Test K = 1 against a plain loop over random instances."""
        rng = np.random.default_rng(24)
        for _ in range(100):
            n, d = int(rng.integers(1, 40)), int(rng.integers(1, 6))
            points = rng.random((n, d))
            y = rng.random(d)
            best_id, best_distance = 0, math.inf
            for i, point in enumerate(points):
                dist = math.sqrt(sum((a - b) ** 2 for a, b in zip(point, y)))
                if dist < best_distance:
                    best_id, best_distance = i, dist
            (neighbor,) = brute_knn(store_of(points), y, 1)
            assert neighbor.example_id == best_id
            assert neighbor.distance == pytest.approx(best_distance)

    @pytest.mark.parametrize("K", [0, 4])
    def test_invalid_k(self, K):
        """Test K outside 1..count."""
        with pytest.raises(InvalidValueError):
            brute_knn(store_of([[0.0], [1.0], [2.0]]), [0.0], K)


class TestRanks:
    """Test ranks and retrieval fractions."""

    def test_rank_and_fraction(self):
        """Test the position of a returned example among all examples."""
        store = store_of([[0.0], [1.0], [2.0], [3.0]])
        result = rank_of(store, [0.0], returned_id=2, query_id=7)
        assert (result.query_id, result.rank, result.fraction) == (7, 3, 0.75)

    def test_duplicates_share_best_rank(self):
        """Test that examples equidistant with the returned one do not count against it."""
        store = store_of([[1.0], [1.0], [5.0]])
        assert rank_of(store, [0.0], returned_id=1).rank == 1

    def test_unknown_returned_id(self):
        """Test that a returned id must be stored."""
        with pytest.raises(InvalidValueError):
            rank_of(store_of([[0.0]]), [0.0], returned_id=3)

    def test_exact_retriever_fraction(self):
        """Test that exact nearest neighbours give f = 1/N."""
        rng = np.random.default_rng(0)
        store = store_of(rng.random((50, 3)))
        f = retrieval_fraction(brute_force_retriever(store), store, rng.random((30, 3)))
        assert f == pytest.approx(1 / 50)

    def test_star_tree_fraction(self):
        """Test that a one-tree forest whose nodes all hang off the root is exact."""
        angles = np.arange(5) * 2 * math.pi / 5
        points = np.vstack([[0.0, 0.0], np.column_stack([np.cos(angles), np.sin(angles)])])
        with BoundaryForest(mode=TaskMode.retrieval(), n_trees=1, k=math.inf) as forest:
            forest.train_many(points)
            assert forest.trees[0].root_fanout() == 5
            queries = np.random.default_rng(1).normal(size=(40, 2))
            assert retrieval_fraction(forest, forest.store, queries) == pytest.approx(1 / 6)
            assert all(r.rank == 1 for r in rank_queries(forest, forest.store, queries))

    def test_percentile_selects_quantile(self):
        """Test that the percentile picks the fraction reached by that share of queries."""
        store = store_of([[float(i)] for i in range(10)])
        answers = iter([0, 1, 2, 3])

        def retriever(y):
            return next(answers)

        # returned ranks are 1, 2, 3, 4 for queries at 0
        queries = np.zeros((4, 1))
        assert retrieval_fraction(retriever, store, queries, percentile=0.5) == pytest.approx(0.2)

    def test_invalid_percentile(self):
        """Test the percentile range check."""
        store = store_of([[0.0]])
        with pytest.raises(InvalidValueError):
            retrieval_fraction(brute_force_retriever(store), store, [[0.0]], percentile=0.0)


class TestErrorRates:
    """Test classification and regression error measures."""

    def test_single_class_has_no_errors(self):
        """Test a constant dataset."""
        positions = np.random.default_rng(0).random((30, 2))
        classes = np.zeros(30, dtype=int)
        with BoundaryForest(mode=TaskMode.classification(), n_trees=3) as forest:
            forest.train_many(positions, indicator_labels(classes, 1))
            assert error_rate(forest, positions, classes) == 0.0

    def test_separated_classes(self):
        """Test error rates on well separated classes."""
        train_positions, train_classes = separated(300, seed=1)
        test_positions, test_classes = separated(100, seed=2)
        with BoundaryForest(mode=TaskMode.classification(), n_trees=5, k=10) as forest:
            forest.train_many(train_positions, indicator_labels(train_classes, 3))
            assert training_error(forest, train_positions, train_classes) == 0.0
            assert error_rate(forest, test_positions, test_classes) == 0.0

    def test_error_rate_ignores_test_order(self):
        """Test that permuting the test set leaves the error rate unchanged."""
        rng = np.random.default_rng(23)
        train_positions, train_classes = separated(200, seed=5)
        noisy = np.where(rng.random(200) < 0.2, (train_classes + 1) % 3, train_classes)
        test_positions, test_classes = separated(60, seed=6)
        with BoundaryForest(mode=TaskMode.classification(), n_trees=4, k=5) as forest:
            forest.train_many(train_positions, indicator_labels(noisy, 3))
            expected = error_rate(forest, test_positions, test_classes)
            for _ in range(5):
                order = rng.permutation(60)
                assert error_rate(forest, test_positions[order], test_classes[order]) == expected

    def test_regression_rmse(self):
        """Test the root mean square of estimate errors."""
        with BoundaryForest(mode=TaskMode.regression(0.0), n_trees=1) as forest:
            forest.train([0.0], [1.0])
            assert regression_rmse(forest, [[1.0], [2.0]], [[1.0], [3.0]]) == pytest.approx(math.sqrt(2))

    def test_knn_tie_goes_to_closest(self):
        """Test the tie rule of the K-NN vote."""
        positions = [[0.0], [1.0], [3.0]]
        assert knn_classify(positions, [0, 1, 1], [0.4], K=2) == 0
        assert knn_classify(positions, [0, 1, 1], [0.4], K=3) == 1

    def test_knn_error_rate(self):
        """Test the K-NN baseline on separated classes."""
        train_positions, train_classes = separated(200, seed=3)
        test_positions, test_classes = separated(50, seed=4)
        assert knn_error_rate(train_positions, train_classes, test_positions, test_classes, K=1) == 0.0
        assert knn_error_rate(train_positions, train_classes, test_positions, (test_classes + 1) % 3, K=3) == 100.0

    def test_length_mismatch(self):
        """Test that positions and classes must have equal length."""
        with BoundaryForest(mode=TaskMode.classification(), n_trees=1) as forest:
            forest.train([0.0], one_hot(0, 2))
            with pytest.raises(InvalidValueError):
                error_rate(forest, [[0.0], [1.0]], [0])


class TestRegret:
    """Test online and offline error comparison."""

    @pytest.fixture
    def params(self):
        return ForestParams(n_trees=5, k=10, seed=0, threads=1)

    def test_report_statistics(self):
        """Test the derived statistics of a regret report."""
        report = RegretReport(seeds=[0, 1], online_errors=[5.0, 7.0], offline_errors=[4.0, 7.5])
        assert report.online_mean == 6.0
        assert report.offline_mean == 5.75
        assert report.mean_gap == pytest.approx(0.75)
        assert report.relative_regret == pytest.approx(0.125)
        assert report.within_bound(0.10, 0.5) is False
        assert report.within_bound(0.10, 1.0) is True

    def test_regret_on_separated_classes(self, params):
        """Test that both variants are exact on separated classes."""
        train_positions, train_classes = separated(200, seed=5)
        test_positions, test_classes = separated(60, seed=6)
        report = regret(train_positions, train_classes, test_positions, test_classes, 3, params)
        assert report.seeds == [0, 1, 2, 3, 4]
        assert report.online_errors == [0.0] * 5
        assert report.offline_errors == [0.0] * 5
        assert report.within_bound()

    def test_online_and_offline_are_deterministic(self, params):
        """Test that each variant is reproducible from its seed."""
        rng = np.random.default_rng(9)
        positions = rng.normal(size=(150, 2))
        classes = (positions[:, 0] * positions[:, 1] > 0).astype(int)
        args = (positions[:100], classes[:100], positions[100:], classes[100:], 2, params)
        assert online_bf_error(*args, seed=3) == online_bf_error(*args, seed=3)
        assert offline_bf_error(*args, seed=3) == offline_bf_error(*args, seed=3)

    def test_too_few_examples(self, params):
        """Test that training needs at least n_trees examples."""
        with pytest.raises(InvalidValueError, match="n_trees"):
            online_bf_error(np.zeros((3, 2)), [0, 1, 0], np.zeros((1, 2)), [0], 2, params, seed=0)
