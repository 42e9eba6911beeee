"""
Command line front end (`bf`)

    bf train-eval --train letter.scale --test letter.scale.t [--mode ...]
    bf bench scaling|artificial|dimsweep|retrieval-f [...]

Reports go to stdout as key=value lines; logs go to stderr.
"""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from ..core.config import BoundaryForestConfig, ForestParams, load_config, parse_k
from ..core.exceptions import BoundaryForestError
from ..monitoring.logging_setup import configure_logging
from ..monitoring.metrics import MetricsCollector
from ..scaling.artificial_tree import artificial_query_curve, artificial_tree_sim
from ..scaling.curves import FLOAT_FORMAT, ScalingCurve, log_checkpoints
from ..scaling.experiments import dimension_sweep, measure_scaling, retrieval_curve
from ..scaling.fitting import MIN_POINTS, FitFamily, fit_and_select
from ..scaling.sources import HypercubeSource, SyntheticSource, random_mixture
from .reports import format_value, run_train_eval

logger = logging.getLogger(__name__)

PROG = "bf"


def count_arg(text: str) -> int:
    """Integer flag that also accepts scientific notation such as 1e6."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{text}'")
    if not math.isfinite(value) or value != int(value):
        raise argparse.ArgumentTypeError(f"expected an integer, got '{text}'")
    return int(value)


def k_arg(text: str) -> float:
    try:
        return parse_k(text)
    except (ValueError, BoundaryForestError):
        raise argparse.ArgumentTypeError(f"k must be an integer or 'inf', got '{text}'")


def int_list_arg(text: str) -> List[int]:
    return [count_arg(part) for part in text.split(",") if part.strip()]


def _add_forest_flags(parser: argparse.ArgumentParser, mode: bool = True):
    if mode:
        parser.add_argument("--mode", choices=["classification", "regression", "retrieval"])
        parser.add_argument("--epsilon", type=float, help="regression threshold")
    parser.add_argument("--nt", type=count_arg, help="number of trees")
    parser.add_argument("--k", type=k_arg, help="maximum children per node, or 'inf'")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=count_arg, help="worker threads (default: logical cores)")


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="YAML configuration file")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--log-format", choices=["text", "json"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Boundary Forest training, evaluation and benchmarks")
    commands = parser.add_subparsers(dest="command", required=True)

    train_eval = commands.add_parser("train-eval", help="train on a LIBSVM file, evaluate on another")
    _add_common_flags(train_eval)
    _add_forest_flags(train_eval)
    train_eval.add_argument("--train", help="training file (LIBSVM)")
    train_eval.add_argument("--test", help="test file (LIBSVM)")
    train_eval.add_argument("--out", "--per-query-csv", dest="out", help="per-query CSV output")
    train_eval.add_argument("--shuffle", action="store_true", default=None,
                            help="shuffle the training stream with the run seed")
    train_eval.add_argument("--minmax", action="store_true", default=None,
                            help="scale features to [0, 1] using the training range")
    train_eval.add_argument("--train-error", action="store_true", default=None,
                            help="also report the error on the training set")
    train_eval.add_argument("--metrics-out", help="write Prometheus metrics of the run to this file")

    bench = commands.add_parser("bench", help="scaling and retrieval benchmarks")
    benches = bench.add_subparsers(dest="bench", required=True)

    scaling = benches.add_parser("scaling", help="query comparisons as a function of N")
    _add_common_flags(scaling)
    _add_forest_flags(scaling, mode=False)
    _add_source_flags(scaling)
    _add_grid_flags(scaling)
    scaling.add_argument("--queries", type=count_arg, help="held-out queries per checkpoint")
    scaling.add_argument("--threshold", type=float, help="rms ratio needed to declare a fit")

    artificial = benches.add_parser("artificial", help="metric-free artificial tree")
    _add_common_flags(artificial)
    artificial.add_argument("--k", type=k_arg, default=math.inf)
    artificial.add_argument("--seed", type=int)
    artificial.add_argument("--window", type=float, default=0.02, help="trailing window fraction")
    artificial.add_argument("--walks", type=count_arg,
                            help="sample the query cost with this many walks per checkpoint instead of "
                                 "inserting point by point (reaches much larger --n)")
    _add_grid_flags(artificial)
    artificial.add_argument("--threshold", type=float)

    dimsweep = benches.add_parser("dimsweep", help="power law exponent against dimension (k=inf)")
    _add_common_flags(dimsweep)
    dimsweep.add_argument("--d", "--dims", dest="dims", type=int_list_arg, default=[5, 20, 100],
                          help="comma separated dimensions")
    dimsweep.add_argument("--seed", type=int)
    _add_grid_flags(dimsweep)
    dimsweep.add_argument("--queries", type=count_arg, default=100)

    retrieval = benches.add_parser("retrieval-f", help="retrieval fraction f as a function of N")
    _add_common_flags(retrieval)
    _add_forest_flags(retrieval, mode=False)
    _add_source_flags(retrieval)
    _add_grid_flags(retrieval)
    retrieval.add_argument("--queries", type=count_arg)
    retrieval.add_argument("--percentile", type=float)

    return parser


def _add_source_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--dist", choices=["hypercube", "mixture"], default="hypercube")
    parser.add_argument("--d", type=count_arg, default=100, help="dimension")
    parser.add_argument("--components", type=count_arg, default=5, help="mixture components")


def _add_grid_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--n", type=count_arg, default=100000, help="largest N")
    parser.add_argument("--n-min", type=count_arg, help="smallest checkpoint")
    parser.add_argument("--per-decade", type=count_arg, help="checkpoints per decade")
    parser.add_argument("--out-dir", help="directory for CSV output")


def _resolve_config(args: argparse.Namespace) -> BoundaryForestConfig:
    config = load_config(args.config)
    forest = config.forest
    for attr, flag in (("mode", "mode"), ("epsilon", "epsilon"), ("n_trees", "nt"), ("k", "k"),
                       ("seed", "seed"), ("threads", "threads")):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(forest, attr, value)
    if args.log_level:
        config.monitoring.log_level = args.log_level
    if args.log_format:
        config.monitoring.log_format = args.log_format
    if getattr(args, "per_decade", None) is not None:
        config.benchmark.checkpoints_per_decade = args.per_decade
    if getattr(args, "out_dir", None):
        config.benchmark.output_dir = args.out_dir
    if getattr(args, "queries", None) is not None and args.command == "bench" and args.bench != "dimsweep":
        config.benchmark.queries_per_checkpoint = args.queries
    if getattr(args, "percentile", None) is not None:
        config.benchmark.percentile = args.percentile
    if getattr(args, "threshold", None) is not None:
        config.benchmark.fit_threshold = args.threshold

    if args.command == "train-eval":
        run = config.run
        run.train_path = args.train or run.train_path
        run.test_path = args.test or run.test_path
        run.output_path = args.out or run.output_path
        run.shuffle = args.shuffle if args.shuffle is not None else run.shuffle
        run.minmax = args.minmax if args.minmax is not None else run.minmax
        run.train_error = args.train_error if args.train_error is not None else run.train_error
        if args.metrics_out:
            config.monitoring.metrics_path = args.metrics_out
    return config


def _check_bench_args(parser: argparse.ArgumentParser, args: argparse.Namespace, config: BoundaryForestConfig):
    n_min = args.n_min if args.n_min is not None else _default_n_min(args, config)
    if n_min > args.n:
        parser.error(f"--n-min ({n_min}) is larger than --n ({args.n})")
    if args.bench in ("scaling", "retrieval-f") and n_min < config.forest.n_trees:
        parser.error(f"--n-min ({n_min}) must be at least --nt ({config.forest.n_trees})")
    if args.bench == "artificial" and not args.k > 1:
        parser.error("--k must be greater than 1")
    if args.bench == "artificial" and not 0 < args.window <= 1:
        parser.error("--window must be in (0, 1]")
    if args.bench == "artificial" and args.walks is not None and args.walks < 1:
        parser.error("--walks must be at least 1")
    if args.bench == "dimsweep" and (not args.dims or min(args.dims) < 1):
        parser.error("--d needs one or more dimensions >= 1")
    if args.bench in ("scaling", "retrieval-f") and args.dist == "hypercube" and args.components != 5:
        parser.error("--components only applies to --dist mixture")


def _default_n_min(args: argparse.Namespace, config: BoundaryForestConfig) -> int:
    if args.bench in ("scaling", "retrieval-f"):
        return max(config.forest.n_trees, min(1000, args.n))
    if args.bench == "dimsweep":
        return min(100, args.n)
    return 1


def _emit(values: Dict[str, object], stream=None):
    stream = stream or sys.stdout
    for key, value in values.items():
        stream.write(f"{key}={format_value(value)}\n")


def _fit_block(curve: ScalingCurve, family_a: FitFamily, family_b: FitFamily, threshold: float,
               prefix: str) -> Dict[str, object]:
    if len(curve) < MIN_POINTS:
        logger.warning(f"Only {len(curve)} checkpoints, skipping the {prefix} fit (needs {MIN_POINTS})")
        return {f"{prefix}_verdict": "skipped"}
    selection = fit_and_select(curve, family_a, family_b, threshold)
    return {f"{prefix}_{key}": value for key, value in selection.as_key_values().items()}


def _source(args: argparse.Namespace, seed: int) -> SyntheticSource:
    if args.dist == "mixture":
        return random_mixture(args.d, args.components, seed)
    return HypercubeSource(args.d, seed)


def _k_label(k: float) -> str:
    return "inf" if math.isinf(k) else str(int(k))


def run_benchmark(args: argparse.Namespace, config: BoundaryForestConfig) -> Dict[str, object]:
    """Run one `bench` subcommand, write its CSV files and return the report fields."""
    bench = config.benchmark
    forest: ForestParams = config.forest
    out_dir = Path(bench.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_min = args.n_min if args.n_min is not None else _default_n_min(args, config)
    checkpoints = log_checkpoints(n_min, args.n, bench.checkpoints_per_decade)
    report: Dict[str, object] = {"bench": args.bench, "seed": forest.seed}

    if args.bench == "scaling":
        params = ForestParams(mode="retrieval", n_trees=forest.n_trees, k=forest.k, seed=forest.seed,
                              threads=forest.threads)
        curve = measure_scaling(params, _source(args, forest.seed), checkpoints, bench.queries_per_checkpoint)
        path = out_dir / f"scaling_{args.dist}_d{args.d}_nt{forest.n_trees}_k{_k_label(forest.k)}.csv"
        curve.to_csv(path)
        report.update(dist=args.dist, d=args.d, n_trees=forest.n_trees, k=forest.k, points=len(curve),
                      tail_mean_comparisons=float(curve.mean_comparisons[-1]), csv=str(path))
        report.update(_fit_block(curve, FitFamily.POWER, FitFamily.LOGARITHMIC, bench.fit_threshold, "query"))
        report.update(_fit_block(curve.training_curve(), FitFamily.LINEARITHMIC, FitFamily.QUADRATIC,
                                 bench.fit_threshold, "training"))

    elif args.bench == "artificial" and args.walks:
        curve = artificial_query_curve(args.n, k=args.k, seed=forest.seed, checkpoints=checkpoints,
                                       queries=args.walks)
        path = out_dir / f"artificial_walks_k{_k_label(args.k)}_seed{forest.seed}.csv"
        curve.to_csv(path)
        report.update(n=args.n, k=args.k, walks=args.walks, tail_mean_comparisons=float(curve.mean_comparisons[-1]),
                      sqrt_law_ratio=float(curve.mean_comparisons[-1] / math.sqrt(2 * args.n)), csv=str(path))
        report.update(_fit_block(curve, FitFamily.POWER, FitFamily.LOGARITHMIC, bench.fit_threshold, "query"))

    elif args.bench == "artificial":
        result = artificial_tree_sim(args.n, k=args.k, seed=forest.seed, checkpoints=checkpoints,
                                     window=args.window)
        path = out_dir / f"artificial_k{_k_label(args.k)}_seed{forest.seed}.csv"
        result.curve.to_csv(path)
        report.update(n=args.n, k=args.k, node_count=result.node_count, root_fanout=result.root_fanout,
                      max_fanout=result.max_fanout, sqrt_law_ratio=result.sqrt_law_ratio(),
                      root_fanout_ratio=result.root_fanout / math.sqrt(2 * args.n), csv=str(path))
        report.update(_fit_block(result.curve, FitFamily.POWER, FitFamily.LOGARITHMIC,
                                 bench.fit_threshold, "query"))

    elif args.bench == "dimsweep":
        fits = dimension_sweep(args.dims, args.n, seed=forest.seed, n_min=n_min,
                               per_decade=bench.checkpoints_per_decade, queries=args.queries)
        frame = pd.DataFrame({"D": [f.dimension for f in fits], "alpha": [f.alpha for f in fits],
                              "rms": [f.report.rms for f in fits]})
        path = out_dir / "dimsweep.csv"
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        report.update({f"alpha_d{f.dimension}": f.alpha for f in fits})
        report["csv"] = str(path)

    else:
        params = ForestParams(mode="retrieval", n_trees=forest.n_trees, k=forest.k, seed=forest.seed,
                              threads=forest.threads)
        points = retrieval_curve(params, _source(args, forest.seed), checkpoints,
                                 queries=bench.queries_per_checkpoint, percentile=bench.percentile)
        frame = pd.DataFrame({"N": [p.n for p in points], "f": [p.fraction for p in points]})
        path = out_dir / f"retrieval_f_{args.dist}_d{args.d}_nt{forest.n_trees}_k{_k_label(forest.k)}.csv"
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        report.update(dist=args.dist, d=args.d, n_trees=forest.n_trees, k=forest.k,
                      percentile=bench.percentile, points=len(points),
                      f_first=points[0].fraction, f_last=points[-1].fraction, csv=str(path))
    return report


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args)
        config.validate()
    except (BoundaryForestError, FileNotFoundError) as e:
        parser.error(str(e))
    configure_logging(config.monitoring)

    try:
        if args.command == "train-eval":
            metrics = MetricsCollector() if config.monitoring.prometheus_enabled else None
            report = run_train_eval(config.run, metrics=metrics)
            report.write(sys.stdout)
            if metrics is not None and config.monitoring.metrics_path:
                metrics.write_prometheus(config.monitoring.metrics_path)
        else:
            _check_bench_args(parser, args, config)
            _emit(run_benchmark(args, config))
    except (BoundaryForestError, OSError) as e:
        logger.error(f"{PROG} {args.command} failed: {e}")
        return 1
    return 0
