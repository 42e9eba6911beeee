"""
RUN_THIS.py - Main entry point for this project.

Usage:
    python RUN_THIS.py                      # small self-contained demonstration
    python RUN_THIS.py train-eval --train ... --test ...
    python RUN_THIS.py bench artificial --n 1e6 --k inf

Requirements:
    - Python 3.8+
    - Install dependencies: pip install -r requirements.txt

With arguments this behaves exactly like `python -m src.cli` (program `bf`).
Without arguments it trains a Boundary Forest on a synthetic two-class
problem and grows an artificial tree, logging what happens.
"""

import logging
import sys

import numpy as np

from src.cli.main import main as cli_main
from src.core.config import MonitoringConfig
from src.core.types import TaskMode
from src.evaluation.protocols import error_rate, indicator_labels
from src.forest.boundary_forest import BoundaryForest
from src.monitoring.logging_setup import configure_logging
from src.monitoring.metrics import MetricsCollector
from src.scaling.artificial_tree import artificial_tree_sim

logger = logging.getLogger(__name__)


def _two_blobs(n: int, seed: int):
    rng = np.random.default_rng(seed)
    classes = rng.integers(0, 2, size=n)
    positions = rng.standard_normal((n, 2)) * 0.6 + np.where(classes[:, None] == 1, 1.0, -1.0)
    return positions, classes


def demonstrate():
    """Train, evaluate and simulate at a size that finishes in seconds."""
    configure_logging(MonitoringConfig(log_level="INFO"))

    train_positions, train_classes = _two_blobs(2000, seed=0)
    test_positions, test_classes = _two_blobs(500, seed=1)
    metrics = MetricsCollector()
    with BoundaryForest(mode=TaskMode.classification(), n_trees=10, k=50, seed=0, metrics=metrics) as forest:
        forest.train_many(train_positions, indicator_labels(train_classes, 2))
        error = error_rate(forest, test_positions, test_classes)
        logger.info(f"Two-blob classification: {forest.node_count} nodes, test error {error:.2f}%")
    logger.info(f"Training comparisons per example: {metrics.get_phase_metrics('train')['avg_comparisons']:.1f}")

    result = artificial_tree_sim(100000, seed=0)
    logger.info(f"Artificial tree: tail cost / sqrt(2N) = {result.sqrt_law_ratio():.3f}, "
                f"root fanout {result.root_fanout}")


if __name__ == "__main__":
    if len(sys.argv) > 1:
        sys.exit(cli_main(sys.argv[1:]))
    demonstrate()
