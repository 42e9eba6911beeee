"""
Train-then-evaluate runs over LIBSVM files and their key=value reports.
"""

import logging
import math
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO

import numpy as np
import pandas as pd

from ..core.config import RunConfig
from ..core.exceptions import ConfigurationError, InvalidValueError
from ..core.types import TaskKind, TaskMode
from ..data.libsvm import LibsvmDataset, load_libsvm, minmax_scale
from ..evaluation.oracles import rank_of
from ..evaluation.protocols import training_error
from ..forest.boundary_forest import BoundaryForest
from ..monitoring.metrics import MetricsCollector
from ..scaling.curves import FLOAT_FORMAT

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    """Report rendering: floats with 6 significant digits, inf as 'inf'."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{float(value):.6g}"
    return str(value)


@dataclass
class RunReport:
    """
    Ordered key=value fields of one run. Wall-clock timings are kept apart
    so the rest of the report is reproducible from (config, seed).
    """
    fields: Dict[str, Any] = field(default_factory=OrderedDict)
    timings: Dict[str, float] = field(default_factory=OrderedDict)
    per_query: List[Dict[str, Any]] = field(default_factory=list)

    def __getitem__(self, key: str) -> Any:
        return self.fields[key]

    def lines(self, include_timings: bool = True) -> List[str]:
        lines = [f"{key}={format_value(value)}" for key, value in self.fields.items()]
        if include_timings:
            lines += [f"{key}={format_value(value)}" for key, value in self.timings.items()]
        return lines

    def render(self, include_timings: bool = True) -> str:
        return "\n".join(self.lines(include_timings)) + "\n"

    def write(self, stream: TextIO, include_timings: bool = True):
        stream.write(self.render(include_timings))

    def per_query_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.per_query)

    def write_per_query(self, path: str):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        self.per_query_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)


def _load_datasets(config: RunConfig, mode: TaskMode):
    if not config.train_path:
        raise ConfigurationError("a training file is required (--train)")
    task = "classification" if mode.kind is TaskKind.CLASSIFICATION else "regression"
    train = load_libsvm(config.train_path, task=task)
    test = None
    if config.test_path:
        test = load_libsvm(config.test_path, dimension=train.dimension, task=task,
                           class_values=train.class_values)
    if config.minmax:
        if test is not None:
            train.positions, test.positions = minmax_scale(train.positions, test.positions)
        else:
            (train.positions,) = minmax_scale(train.positions)
    return train, test


def _evaluate(forest: BoundaryForest, test: LibsvmDataset, report: RunReport):
    kind = forest.mode.kind
    total_comparisons = 0
    wrong = 0
    squared = []
    fractions = []

    for i in range(len(test)):
        prediction = forest.query(test.positions[i])
        comparisons = prediction.stats.metric_comparisons
        total_comparisons += comparisons
        row: Dict[str, Any] = {"query": i}
        if kind is TaskKind.CLASSIFICATION:
            predicted = prediction.class_index
            wrong += int(predicted != test.classes[i])
            row.update(true=test.class_values[test.classes[i]], predicted=test.class_values[predicted])
        elif kind is TaskKind.REGRESSION:
            estimate = float(prediction.label[0])
            squared.append((estimate - test.targets[i]) ** 2)
            row.update(true=test.targets[i], predicted=estimate)
        else:
            rank = rank_of(forest.store, test.positions[i], prediction.example_id, query_id=i,
                           metric=forest.position_metric)
            fractions.append(rank.fraction)
            row.update(returned_id=prediction.example_id, rank=rank.rank)
        if prediction.distance is not None:
            row["distance"] = prediction.distance
        row["comparisons"] = comparisons
        report.per_query.append(row)

    n = len(test)
    report.fields["test_rows"] = n
    if kind is TaskKind.CLASSIFICATION:
        report.fields["error_rate_pct"] = 100.0 * wrong / n
    elif kind is TaskKind.REGRESSION:
        report.fields["rmse"] = float(np.sqrt(np.mean(squared)))
    else:
        report.fields["retrieval_fraction_p99"] = float(np.quantile(fractions, 0.99, method="inverted_cdf"))
        report.fields["mean_fraction"] = float(np.mean(fractions))
    report.fields["query_comparisons"] = total_comparisons
    report.fields["mean_comparisons_per_tree"] = total_comparisons / (n * forest.n_trees)


def run_train_eval(config: RunConfig, metrics: Optional[MetricsCollector] = None) -> RunReport:
    """
    One pass over the training file in file order (or a seeded shuffle of it),
    then evaluation on the test file when one is given.
    """
    params = config.forest
    mode = TaskMode.parse(params.mode, params.epsilon)
    train, test = _load_datasets(config, mode)
    if len(train) < params.n_trees:
        raise InvalidValueError(f"training file has {len(train)} rows, fewer than n_trees={params.n_trees}")
    if config.shuffle:
        train = train.reordered(np.random.default_rng(params.seed).permutation(len(train)))

    report = RunReport()
    report.fields.update(
        mode=mode.name, n_trees=params.n_trees, k=params.k, epsilon=params.epsilon, seed=params.seed,
        dimension=train.dimension, train_rows=len(train),
    )
    if train.classes is not None:
        report.fields["n_classes"] = train.n_classes

    labels = None if mode.kind is TaskKind.RETRIEVAL else train.label_vectors()
    with BoundaryForest(mode=mode, n_trees=params.n_trees, k=params.k, seed=params.seed,
                        threads=params.threads, metrics=metrics) as forest:
        started = time.perf_counter()
        forest.train_many(train.positions, labels)
        report.timings["wall_time_train_s"] = time.perf_counter() - started
        report.fields.update(stored_examples=forest.stored_examples, nodes=forest.node_count,
                             training_comparisons=forest.training_stats.metric_comparisons)
        logger.info(f"Trained on {len(train)} rows: {forest.node_count} nodes over {params.n_trees} trees")

        if config.train_error:
            if mode.kind is not TaskKind.CLASSIFICATION:
                raise ConfigurationError("training error is only defined for classification")
            report.fields["train_error_pct"] = training_error(forest, train.positions, train.classes)

        if test is not None:
            started = time.perf_counter()
            _evaluate(forest, test, report)
            report.timings["wall_time_test_s"] = time.perf_counter() - started

    if config.output_path:
        report.write_per_query(config.output_path)
        logger.info(f"Per-query results written to {config.output_path}")
    return report
