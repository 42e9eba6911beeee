"""
Tests for the Boundary Forest: initialization, online training, Shepard
combination, the offline variant, determinism and thread independence.
"""

import numpy as np
import pytest

from src.core.exceptions import DimensionMismatchError, ForestStateError, InvalidValueError
from src.core.types import TaskMode, label_class, one_hot
from src.forest.boundary_forest import BoundaryForest, Prediction, TreeHit, shepard_estimate


def classification_forest(n_trees=2, k=50, seed=0, threads=1) -> BoundaryForest:
    return BoundaryForest(mode=TaskMode.classification(), n_trees=n_trees, k=k, seed=seed, threads=threads)


def blobs(n, seed, n_classes=3, dimension=2):
    rng = np.random.default_rng(seed)
    classes = rng.integers(0, n_classes, size=n)
    centres = np.arange(n_classes)[:, None] * 2.0 * np.ones(dimension)
    positions = centres[classes] + rng.normal(scale=0.8, size=(n, dimension))
    return positions, classes


class TestShepardEstimate:
    """Test inverse-distance weighted averaging."""

    def test_symmetric(self):
        """Test equal weights for equal distances."""
        assert shepard_estimate([([1, 0], 1.0), ([0, 1], 1.0)]).tolist() == [0.5, 0.5]

    def test_exact_match_dominates(self):
        """Test that a zero distance returns that label alone."""
        assert shepard_estimate([([1, 0], 0.0), ([0, 1], 5.0)]).tolist() == [1.0, 0.0]

    def test_several_exact_matches_are_averaged(self):
        """Test the mean of all zero-distance labels."""
        estimate = shepard_estimate([([1, 0], 0.0), ([0, 1], 0.0), ([0, 1], 3.0)])
        assert estimate.tolist() == [0.5, 0.5]

    def test_inverse_distance_weights(self):
        """Test weights 1, 1/2 and 1/4."""
        estimate = shepard_estimate([([1, 0, 0], 1.0), ([0, 1, 0], 2.0), ([0, 0, 1], 4.0)])
        assert estimate == pytest.approx([4 / 7, 2 / 7, 1 / 7])

    def test_convex_and_order_free(self):
        """Test that estimates stay within the label range and ignore input order."""
        rng = np.random.default_rng(21)
        for _ in range(200):
            m = int(rng.integers(1, 8))
            labels = rng.normal(size=(m, 3))
            distances = rng.uniform(0.01, 10.0, size=m)
            if rng.random() < 0.3:
                distances[rng.integers(m)] = 0.0
            results = list(zip(labels, distances))
            estimate = shepard_estimate(results)
            assert np.all(estimate >= labels.min(axis=0) - 1e-12)
            assert np.all(estimate <= labels.max(axis=0) + 1e-12)
            shuffled = [results[i] for i in rng.permutation(m)]
            assert shepard_estimate(shuffled) == pytest.approx(estimate)

            indicators = np.eye(4)[rng.integers(4, size=m)]
            assert shepard_estimate(list(zip(indicators, distances))).sum() == pytest.approx(1.0)

    def test_argmax_ignores_distance_scale(self):
        """Test that multiplying every distance by one factor keeps the winning class."""
        rng = np.random.default_rng(22)
        for _ in range(200):
            m = int(rng.integers(1, 8))
            indicators = np.eye(5)[rng.integers(5, size=m)]
            distances = rng.uniform(0.01, 10.0, size=m)
            factor = float(rng.uniform(1e-3, 1e3))
            plain = shepard_estimate(list(zip(indicators, distances)))
            scaled = shepard_estimate(list(zip(indicators, distances * factor)))
            assert label_class(scaled) == label_class(plain)

    @pytest.mark.parametrize("results", [[], [([1.0], -1.0)], [([1.0], float("nan"))]])
    def test_invalid_input(self, results):
        """Test empty input and invalid distances."""
        with pytest.raises(InvalidValueError):
            shepard_estimate(results)


class TestInitialization:
    """Test the buffered initialization of the trees."""

    def test_single_tree(self):
        """Test that one tree is rooted at the first point and nothing else happens."""
        forest = BoundaryForest(mode=TaskMode.retrieval(), n_trees=1)
        assert forest.train([0.0, 0.0]) == [True]
        assert forest.initialized
        assert len(forest.trees[0]) == 1
        assert forest.trees[0].example_id(0) == 0

    def test_two_trees_cross_train(self):
        """Test that each of two trees is rooted at its own point and trained on the other."""
        forest = BoundaryForest(mode=TaskMode.retrieval(), n_trees=2)
        assert forest.train([0.0]) == []
        assert not forest.initialized
        assert forest.train([1.0]) == [True, True]
        assert forest.trees[0].structure() == ((0, (1,)), (1, ()))
        assert forest.trees[1].structure() == ((1, (1,)), (0, ()))
        assert forest.stored_examples == 2

    def test_same_class_roots_only(self):
        """Test that examples of the root's class are rejected during initialization."""
        forest = classification_forest(n_trees=3)
        label = one_hot(0, 2)
        forest.train([0.0, 0.0], label)
        forest.train([1.0, 0.0], label)
        flags = forest.train([0.0, 1.0], label)
        assert flags == [False, False, True]
        for i, tree in enumerate(forest.trees):
            assert len(tree) == 1
            assert tree.example_id(tree.root) == i

    def test_roots_follow_arrival_order(self):
        """Test that tree i is rooted at the i-th example."""
        positions, classes = blobs(40, seed=1)
        forest = classification_forest(n_trees=10)
        forest.train_many(positions, np.array([one_hot(c, 3) for c in classes]))
        for i, tree in enumerate(forest.trees):
            assert tree.example_id(tree.root) == i

    def test_query_before_initialization(self):
        """Test the brute-force answer over buffered examples."""
        forest = classification_forest(n_trees=5)
        forest.train([0.0, 0.0], one_hot(0, 2))
        forest.train([4.0, 0.0], one_hot(1, 2))
        assert forest.classify([0.5, 0.0]) == 0
        assert forest.classify([4.0, 0.0]) == 1
        assert forest.query([1.0, 0.0]).label == pytest.approx([0.75, 0.25])

    def test_query_without_examples(self):
        """Test that an empty forest cannot answer."""
        with pytest.raises(ForestStateError):
            classification_forest().query([0.0])

    def test_initialize_twice(self):
        """Test that initialization happens once."""
        forest = BoundaryForest(mode=TaskMode.retrieval(), n_trees=1)
        forest.train([0.0])
        with pytest.raises(ForestStateError):
            forest.initialize(forest.init_buffer)


class TestTraining:
    """Test online training flags and storage."""

    def test_retrieval_adds_to_every_tree(self):
        """Test that retrieval training adds each example once to the store and to all trees."""
        rng = np.random.default_rng(0)
        forest = BoundaryForest(mode=TaskMode.retrieval(), n_trees=4, k=3)
        forest.train_many(rng.random((4, 2)))
        for i in range(20):
            assert forest.train(rng.random(2)) == [True] * 4
            assert forest.stored_examples == 5 + i
        assert all(len(tree) == 24 for tree in forest.trees)

    def test_correct_everywhere_is_not_stored(self):
        """Test that an example every tree classifies correctly changes nothing."""
        forest = classification_forest()
        forest.train([0.0, 0.0], one_hot(0, 2))
        forest.train([1.0, 0.0], one_hot(0, 2))
        assert forest.train([0.1, 0.0], one_hot(0, 2)) == [False, False]
        assert forest.stored_examples == 2

    def test_misclassified_by_one_tree(self):
        """Test that an example added by one tree only is stored exactly once."""
        forest = classification_forest()
        forest.train([0.0, 0.0], one_hot(0, 2))
        forest.train([4.0, 0.0], one_hot(0, 2))
        assert forest.train([10.0, 0.0], one_hot(1, 2)) == [True, True]
        before = forest.stored_examples
        assert forest.train([6.0, 0.0], one_hot(1, 2)) == [False, True]
        assert forest.stored_examples == before + 1

    def test_input_validation(self):
        """Test dimension and label checks on training input."""
        forest = classification_forest()
        forest.train([0.0, 0.0], one_hot(0, 2))
        with pytest.raises(DimensionMismatchError):
            forest.train([0.0], one_hot(0, 2))
        with pytest.raises(DimensionMismatchError):
            forest.train([0.0, 1.0], one_hot(0, 3))
        with pytest.raises(InvalidValueError, match="requires a label"):
            forest.train([0.0, 1.0])

    @pytest.mark.parametrize("kwargs", [{"n_trees": 0}, {"k": 1}])
    def test_invalid_parameters(self, kwargs):
        """Test constructor checks."""
        with pytest.raises(InvalidValueError):
            BoundaryForest(**kwargs)


class TestQueries:
    """Test how per-tree results are combined."""

    def test_retrieval_takes_closest_tree(self):
        """Test that retrieval returns the hit with the smallest distance."""
        forest = BoundaryForest(mode=TaskMode.retrieval(), n_trees=3)
        hits = [TreeHit(0, 0, 10, 3.0), TreeHit(1, 0, 11, 1.5), TreeHit(2, 0, 12, 2.2)]
        prediction = forest.combine(hits)
        assert prediction.example_id == 11
        assert prediction.distance == 1.5

    def test_retrieval_ties_go_to_lowest_tree(self):
        """Test the tie rule across trees."""
        forest = BoundaryForest(mode=TaskMode.retrieval(), n_trees=2)
        hits = [TreeHit(0, 0, 7, 1.0), TreeHit(1, 0, 3, 1.0)]
        assert forest.combine(hits).example_id == 7

    def test_retrieval_distance_is_smallest_hit(self):
        """Test that the forest answer is at least as close as every tree's answer."""
        rng = np.random.default_rng(25)
        with BoundaryForest(mode=TaskMode.retrieval(), n_trees=8, k=4, seed=2) as forest:
            forest.train_many(rng.random((300, 3)))
            for y in rng.random((100, 3)):
                prediction = forest.query(y)
                assert len(prediction.hits) == 8
                assert all(prediction.distance <= hit.distance for hit in prediction.hits)
                stored = forest.store.position(prediction.example_id)
                assert prediction.distance == pytest.approx(np.linalg.norm(stored - y))

    @pytest.mark.parametrize("label,expected", [([0.5, 0.3, 0.2], 0), ([0.5, 0.5], 0), ([0.1, 0.2, 0.7], 2)])
    def test_class_index(self, label, expected):
        """Test argmax with ties to the lowest class."""
        assert Prediction(hits=[], label=np.array(label)).class_index == expected

    def test_single_tree_matches_tree_query(self):
        """Test that a one-tree forest answers with its tree's node and label."""
        positions, classes = blobs(200, seed=4)
        labels = np.array([one_hot(c, 3) for c in classes])
        forest = classification_forest(n_trees=1, k=5)
        forest.train_many(positions, labels)
        tree = forest.trees[0]
        for y in np.random.default_rng(5).normal(size=(30, 2)) * 3:
            prediction = forest.query(y)
            node = prediction.hits[0].node
            assert node == tree.query(y)
            assert prediction.label.tolist() == forest.store.label(tree.example_id(node)).tolist()

    def test_mode_checks(self):
        """Test that each answer type needs the matching mode."""
        forest = BoundaryForest(mode=TaskMode.regression(0.1), n_trees=1)
        forest.train([0.0], [1.0])
        with pytest.raises(ForestStateError):
            forest.classify([0.0])
        with pytest.raises(ForestStateError):
            forest.retrieve([0.0])
        assert forest.estimate([0.0]).tolist() == [1.0]

    def test_query_statistics(self):
        """Test that query comparisons are summed over trees."""
        forest = BoundaryForest(mode=TaskMode.retrieval(), n_trees=3)
        forest.train_many(np.eye(3))
        prediction = forest.query([0.0, 0.0, 0.0])
        assert prediction.stats.metric_comparisons >= 3
        assert prediction.stats.path_length >= 3


def positional_structure(forest: BoundaryForest) -> tuple:
    """Tree structure of a one-tree forest with example ids replaced by stored positions."""
    return tuple((tuple(forest.store.position(example_id).tolist()), children)
                 for example_id, children in forest.trees[0].structure())


def trained_online(forest: BoundaryForest, *example) -> bool:
    """
    Train one example; False only when it completed the initialization of a
    forest with n_T > k, where the tree rooted at it may already have a full root.
    """
    seeding = not forest.initialized and len(forest.init_buffer) == forest.n_trees - 1
    forest.train(*example)
    return not (seeding and forest.n_trees > forest.k)


class TestOneShot:
    """Test that a just-trained example is answered exactly."""

    @pytest.mark.parametrize("n_trees", [1, 5, 50])
    @pytest.mark.parametrize("k", [2, 5, 50])
    def test_interleaved_train_and_query(self, n_trees, k):
        """Test one-shot answers for all three modes over interleaved steps."""
        rng = np.random.default_rng(100 * n_trees + k)
        epsilon = 0.2
        classifier = classification_forest(n_trees=n_trees, k=k, seed=1)
        regressor = BoundaryForest(mode=TaskMode.regression(epsilon), n_trees=n_trees, k=k, seed=1)
        retriever = BoundaryForest(mode=TaskMode.retrieval(), n_trees=n_trees, k=k, seed=1)
        # 9 grid cells x 120 steps covers more than a thousand interleaved steps
        for _ in range(120):
            y = rng.random(3)
            c = int(rng.integers(4))
            target = rng.normal(size=2)

            if trained_online(classifier, y, one_hot(c, 4)):
                assert classifier.classify(y) == c

            if trained_online(regressor, y, target):
                assert np.max(np.abs(regressor.estimate(y) - target)) <= epsilon + 1e-12

            if trained_online(retriever, y):
                prediction = retriever.query(y)
                assert prediction.distance == 0.0
                if retriever.initialized:
                    assert retriever.store.position(prediction.example_id).tolist() == y.tolist()


class TestReproducibility:
    """Test determinism, thread independence and scale invariance."""

    @pytest.fixture
    def data(self):
        positions, classes = blobs(400, seed=2, dimension=4)
        return positions, np.array([one_hot(c, 3) for c in classes])

    def test_same_seed_same_forest(self, data):
        """Test that two runs with the same seed build identical trees."""
        positions, labels = data
        first, second = classification_forest(10, 5, seed=3), classification_forest(10, 5, seed=3)
        first.train_many(positions, labels)
        second.train_many(positions, labels)
        assert first.tree_structures() == second.tree_structures()

    def test_threads_do_not_change_results(self, data):
        """Test that parallel training and querying match the serial forest."""
        positions, labels = data
        serial = classification_forest(10, 5, seed=3, threads=1)
        with classification_forest(10, 5, seed=3, threads=4) as parallel:
            serial.train_many(positions, labels)
            parallel.train_many(positions, labels)
            assert serial.tree_structures() == parallel.tree_structures()
            assert serial.stored_examples == parallel.stored_examples
            for y in positions[:50] + 0.01:
                assert serial.query(y).label.tolist() == parallel.query(y).label.tolist()

    def test_scale_invariance(self, data):
        """Test that scaling every feature leaves trees and classifications unchanged."""
        positions, labels = data
        plain, scaled = classification_forest(10, 5, seed=3), classification_forest(10, 5, seed=3)
        plain.train_many(positions, labels)
        scaled.train_many(positions * 1000.0, labels)
        assert plain.tree_structures() == scaled.tree_structures()
        queries = np.random.default_rng(9).normal(size=(50, 4)) * 2
        assert [plain.classify(q) for q in queries] == [scaled.classify(q * 1000.0) for q in queries]


class TestOfflineForest:
    """Test the variant in which every tree sees its own reshuffle of all data."""

    def test_roots_are_first_of_each_order(self):
        """Test that tree i is rooted at the first element of its own order."""
        positions, classes = blobs(100, seed=6)
        labels = np.array([one_hot(c, 3) for c in classes])
        forest = BoundaryForest.build_offline(positions, labels, TaskMode.classification(), n_trees=5, k=10)
        assert len(forest.offline_orders) == 5
        for tree, order in zip(forest.trees, forest.offline_orders):
            assert sorted(order.tolist()) == list(range(100))
            assert tree.example_id(tree.root) == int(order[0])
        assert forest.stored_examples == 100

    def test_single_tree_matches_online_on_same_order(self):
        """Test that a one-tree offline forest equals an online forest fed the same shuffle."""
        positions, classes = blobs(150, seed=7)
        labels = np.array([one_hot(c, 3) for c in classes])
        offline = BoundaryForest.build_offline(positions, labels, TaskMode.classification(),
                                               n_trees=1, k=5, seed=4)
        order = offline.offline_orders[0]
        online = classification_forest(n_trees=1, k=5, seed=4)
        online.train_many(positions[order], labels[order])

        # online stores only the examples it added, so ids differ; positions do not
        assert online.stored_examples < offline.stored_examples
        assert positional_structure(offline) == positional_structure(online)
        queries = np.random.default_rng(8).normal(size=(40, 2)) * 3
        assert [offline.classify(q) for q in queries] == [online.classify(q) for q in queries]

    def test_requires_labels(self):
        """Test that offline classification needs labels."""
        with pytest.raises(InvalidValueError):
            BoundaryForest.build_offline(np.zeros((3, 2)), None, TaskMode.classification(), n_trees=1)
