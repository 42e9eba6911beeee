"""
Configuration Management for the Boundary Forest toolkit

This module handles configuration loading, validation, and management
for training runs, benchmarks and monitoring.
"""

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from .exceptions import ConfigurationError
from .types import TaskKind

SEED_ENV_VAR = "BF_SEED"
CONFIG_ENV_VAR = "BF_CONFIG"


def parse_k(value: Any) -> float:
    """Child cap from config or CLI text; 'inf', 'infinite' and None mean unbounded."""
    if value is None:
        return math.inf
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "infinite", "infinity", "none"):
            return math.inf
        value = float(text)
    value = float(value)
    if math.isinf(value):
        return math.inf
    if value != int(value):
        raise ConfigurationError(f"k must be an integer or 'inf', got {value}")
    return float(int(value))


@dataclass
class ForestParams:
    """Boundary Forest hyper-parameters."""
    mode: str = "classification"  # classification, regression, retrieval
    n_trees: int = 50
    k: float = 50  # math.inf for unbounded
    epsilon: float = 0.0
    seed: int = 0
    threads: Optional[int] = None  # None = logical cores


@dataclass
class MonitoringConfig:
    """Logging and metrics configuration."""
    log_level: str = "INFO"
    log_format: str = "text"  # text, json
    prometheus_enabled: bool = True
    metrics_path: Optional[str] = None


@dataclass
class RunConfig:
    """A train-then-evaluate run over LIBSVM files."""
    forest: ForestParams = field(default_factory=ForestParams)
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    output_path: Optional[str] = None  # per-query CSV
    shuffle: bool = False
    minmax: bool = False
    train_error: bool = False


@dataclass
class BenchmarkConfig:
    """Defaults for the scaling and retrieval benchmarks."""
    output_dir: str = "bench_out"
    checkpoints_per_decade: int = 4
    queries_per_checkpoint: int = 200
    percentile: float = 0.99
    fit_threshold: float = 5.0


@dataclass
class BoundaryForestConfig:
    """Main configuration class."""

    run: RunConfig = field(default_factory=RunConfig)
    monitoring: MonitoringConfig = field(default_factory=MonitoringConfig)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)

    @property
    def forest(self) -> ForestParams:
        return self.run.forest

    @classmethod
    def from_file(cls, config_path: str) -> "BoundaryForestConfig":
        """Load configuration from YAML file."""
        config_path = Path(config_path)

        if not config_path.exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        with open(config_path, 'r') as f:
            config_data = yaml.safe_load(f) or {}

        return cls.from_dict(config_data)

    @classmethod
    def from_dict(cls, config_data: Dict[str, Any]) -> "BoundaryForestConfig":
        """Create configuration from dictionary."""
        config = cls()

        # Forest settings
        forest = config.run.forest
        if "forest" in config_data:
            forest_data = config_data["forest"] or {}
            forest.mode = forest_data.get("mode", forest.mode)
            forest.n_trees = int(forest_data.get("n_trees", forest.n_trees))
            if "k" in forest_data:
                forest.k = parse_k(forest_data["k"])
            forest.epsilon = float(forest_data.get("epsilon", forest.epsilon))
            forest.threads = forest_data.get("threads", forest.threads)
            if "seed" in forest_data:
                forest.seed = int(forest_data["seed"])
            else:
                forest.seed = seed_from_env(forest.seed)
        else:
            forest.seed = seed_from_env(forest.seed)

        # Run settings
        if "run" in config_data:
            run_data = config_data["run"] or {}
            config.run.train_path = run_data.get("train", config.run.train_path)
            config.run.test_path = run_data.get("test", config.run.test_path)
            config.run.output_path = run_data.get("out", config.run.output_path)
            config.run.shuffle = bool(run_data.get("shuffle", config.run.shuffle))
            config.run.minmax = bool(run_data.get("minmax", config.run.minmax))
            config.run.train_error = bool(run_data.get("train_error", config.run.train_error))

        # Monitoring settings
        if "monitoring" in config_data:
            monitoring_data = config_data["monitoring"] or {}
            config.monitoring.log_level = monitoring_data.get("log_level", config.monitoring.log_level)
            config.monitoring.log_format = monitoring_data.get("log_format", config.monitoring.log_format)
            config.monitoring.prometheus_enabled = monitoring_data.get("prometheus_enabled", config.monitoring.prometheus_enabled)
            config.monitoring.metrics_path = monitoring_data.get("metrics_path", config.monitoring.metrics_path)

        # Benchmark settings
        if "benchmark" in config_data:
            bench_data = config_data["benchmark"] or {}
            config.benchmark.output_dir = bench_data.get("output_dir", config.benchmark.output_dir)
            config.benchmark.checkpoints_per_decade = int(bench_data.get("checkpoints_per_decade", config.benchmark.checkpoints_per_decade))
            config.benchmark.queries_per_checkpoint = int(bench_data.get("queries_per_checkpoint", config.benchmark.queries_per_checkpoint))
            config.benchmark.percentile = float(bench_data.get("percentile", config.benchmark.percentile))
            config.benchmark.fit_threshold = float(bench_data.get("fit_threshold", config.benchmark.fit_threshold))

        return config

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary."""
        forest = self.run.forest
        return {
            "forest": {
                "mode": forest.mode,
                "n_trees": forest.n_trees,
                "k": "inf" if math.isinf(forest.k) else int(forest.k),
                "epsilon": forest.epsilon,
                "seed": forest.seed,
                "threads": forest.threads
            },
            "run": {
                "train": self.run.train_path,
                "test": self.run.test_path,
                "out": self.run.output_path,
                "shuffle": self.run.shuffle,
                "minmax": self.run.minmax,
                "train_error": self.run.train_error
            },
            "monitoring": {
                "log_level": self.monitoring.log_level,
                "log_format": self.monitoring.log_format,
                "prometheus_enabled": self.monitoring.prometheus_enabled,
                "metrics_path": self.monitoring.metrics_path
            },
            "benchmark": {
                "output_dir": self.benchmark.output_dir,
                "checkpoints_per_decade": self.benchmark.checkpoints_per_decade,
                "queries_per_checkpoint": self.benchmark.queries_per_checkpoint,
                "percentile": self.benchmark.percentile,
                "fit_threshold": self.benchmark.fit_threshold
            }
        }

    def save_to_file(self, config_path: str):
        """Save configuration to YAML file."""
        config_path = Path(config_path)
        config_path.parent.mkdir(parents=True, exist_ok=True)

        with open(config_path, 'w') as f:
            yaml.dump(self.to_dict(), f, default_flow_style=False, indent=2)

    def validate(self) -> bool:
        """Validate configuration settings."""
        errors = []
        forest = self.run.forest

        if forest.mode not in [kind.value for kind in TaskKind]:
            errors.append(f"Invalid mode: {forest.mode}")
        if forest.n_trees < 1:
            errors.append("n_trees must be at least 1")
        if not forest.k > 1:
            errors.append("k must be greater than 1")
        if not math.isfinite(forest.epsilon) or forest.epsilon < 0:
            errors.append("epsilon must be a finite value >= 0")
        if forest.threads is not None and forest.threads < 1:
            errors.append("threads must be at least 1")

        if self.monitoring.log_format not in ["text", "json"]:
            errors.append("Invalid log format")
        if self.monitoring.log_level.upper() not in ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]:
            errors.append("Invalid log level")
        if self.monitoring.metrics_path and not self.monitoring.prometheus_enabled:
            errors.append("metrics_path needs prometheus_enabled")

        if not 0 < self.benchmark.percentile <= 1:
            errors.append("percentile must be in (0, 1]")
        if self.benchmark.fit_threshold <= 1:
            errors.append("fit_threshold must be greater than 1")
        if self.benchmark.checkpoints_per_decade < 1:
            errors.append("checkpoints_per_decade must be at least 1")

        if errors:
            raise ConfigurationError(f"Configuration validation failed:\n" + "\n".join(errors))

        return True


def seed_from_env(default: int = 0) -> int:
    """Seed fallback from the BF_SEED environment variable."""
    value = os.getenv(SEED_ENV_VAR)
    if value is None or value.strip() == "":
        return default
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"{SEED_ENV_VAR} must be an integer, got '{value}'")


def load_config(config_path: Optional[str] = None) -> BoundaryForestConfig:
    """Load configuration from file or environment."""
    load_dotenv()

    if config_path:
        return BoundaryForestConfig.from_file(config_path)

    # Try to load from environment variable
    config_env = os.getenv(CONFIG_ENV_VAR)
    if config_env:
        return BoundaryForestConfig.from_file(config_env)

    # Try default locations
    default_paths = [
        "config/boundary-forest.yaml",
        "boundary-forest.yaml",
        "~/.boundary-forest/config.yaml"
    ]

    for path in default_paths:
        expanded_path = os.path.expanduser(path)
        if os.path.exists(expanded_path):
            return BoundaryForestConfig.from_file(expanded_path)

    # Return default configuration
    return BoundaryForestConfig.from_dict({})
