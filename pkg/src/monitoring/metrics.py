"""
Monitoring and Metrics Collection

This module collects workload metrics for Boundary Forest runs: examples
trained and queried, nodes added, metric comparisons and operation timings,
exported as JSON or in the Prometheus exposition format.
"""

import json
import logging
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Dict, Optional

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, generate_latest

logger = logging.getLogger(__name__)

PHASES = ("train", "query")


@dataclass
class PhaseMetrics:
    """Aggregates for one phase (training or querying)."""
    phase: str
    count: int = 0
    comparisons: int = 0
    nodes_added: int = 0
    total_duration: float = 0.0
    min_duration: float = float('inf')
    max_duration: float = 0.0
    last_time: Optional[datetime] = None

    @property
    def avg_duration(self) -> float:
        return self.total_duration / self.count if self.count else 0.0

    @property
    def avg_comparisons(self) -> float:
        return self.comparisons / self.count if self.count else 0.0


class MetricsCollector:
    """
    Metrics collector for a Boundary Forest.

    Every collector owns its own Prometheus registry so that several forests
    (for example online and offline variants in a regret run) can be
    instrumented side by side.
    """

    def __init__(self, namespace: str = "bf"):
        """Initialize the metrics collector."""
        self.namespace = namespace
        self.registry = CollectorRegistry()
        self.phase_metrics: Dict[str, PhaseMetrics] = {phase: PhaseMetrics(phase) for phase in PHASES}
        self.started_at = datetime.now()
        self.stored_examples = 0

        self._init_prometheus_metrics()

        logger.debug("Metrics collector initialized")

    def _init_prometheus_metrics(self):
        """Initialize Prometheus metrics."""
        ns = self.namespace
        self.example_counter = Counter(
            f'{ns}_examples_total',
            'Examples processed',
            ['phase'],
            registry=self.registry
        )

        self.comparison_counter = Counter(
            f'{ns}_metric_comparisons_total',
            'Position-metric evaluations',
            ['phase'],
            registry=self.registry
        )

        self.nodes_added_counter = Counter(
            f'{ns}_nodes_added_total',
            'Tree nodes created by training',
            registry=self.registry
        )

        self.operation_duration = Histogram(
            f'{ns}_operation_duration_seconds',
            'Duration of one forest train or query call',
            ['phase'],
            registry=self.registry
        )

        self.stored_examples_gauge = Gauge(
            f'{ns}_stored_examples',
            'Examples held in the shared store',
            registry=self.registry
        )

    def _record(self, phase: str, comparisons: int, duration: float) -> PhaseMetrics:
        metrics = self.phase_metrics[phase]
        metrics.count += 1
        metrics.comparisons += comparisons
        metrics.total_duration += duration
        metrics.min_duration = min(metrics.min_duration, duration)
        metrics.max_duration = max(metrics.max_duration, duration)
        metrics.last_time = datetime.now()

        self.example_counter.labels(phase=phase).inc()
        self.comparison_counter.labels(phase=phase).inc(comparisons)
        self.operation_duration.labels(phase=phase).observe(duration)
        return metrics

    def record_training(self, added_nodes: int, comparisons: int, duration: float = 0.0,
                        stored_examples: Optional[int] = None):
        """Record one forest training call."""
        metrics = self._record("train", comparisons, duration)
        metrics.nodes_added += added_nodes
        self.nodes_added_counter.inc(added_nodes)
        if stored_examples is not None:
            self.stored_examples = stored_examples
            self.stored_examples_gauge.set(stored_examples)

    def record_query(self, comparisons: int, duration: float = 0.0):
        """Record one forest query."""
        self._record("query", comparisons, duration)

    def get_phase_metrics(self, phase: str) -> Dict[str, Any]:
        """Get metrics for one phase."""
        if phase not in self.phase_metrics:
            return {"error": f"Phase '{phase}' not found"}

        metrics = self.phase_metrics[phase]
        return {
            "phase": phase,
            "count": metrics.count,
            "comparisons": metrics.comparisons,
            "avg_comparisons": metrics.avg_comparisons,
            "nodes_added": metrics.nodes_added,
            "avg_duration": metrics.avg_duration,
            "min_duration": metrics.min_duration if metrics.min_duration != float('inf') else 0.0,
            "max_duration": metrics.max_duration,
            "last_time": metrics.last_time.isoformat() if metrics.last_time else None
        }

    def get_global_metrics(self) -> Dict[str, Any]:
        """Get global metrics."""
        uptime = (datetime.now() - self.started_at).total_seconds()
        train = self.phase_metrics["train"]
        query = self.phase_metrics["query"]

        return {
            "examples_trained": train.count,
            "queries": query.count,
            "nodes_added": train.nodes_added,
            "stored_examples": self.stored_examples,
            "training_comparisons": train.comparisons,
            "query_comparisons": query.comparisons,
            "uptime_seconds": uptime
        }

    def get_prometheus_metrics(self) -> str:
        """Get Prometheus-formatted metrics."""
        return generate_latest(self.registry).decode("utf-8")

    def export_metrics(self, format: str = "json") -> str:
        """Export metrics in the specified format."""
        if format.lower() == "json":
            return json.dumps({
                "global": self.get_global_metrics(),
                "phases": {phase: self.get_phase_metrics(phase) for phase in PHASES}
            }, indent=2)
        elif format.lower() == "prometheus":
            return self.get_prometheus_metrics()
        else:
            raise ValueError(f"Unsupported export format: {format}")

    def write_prometheus(self, path: str):
        """Write the Prometheus exposition to a file."""
        with open(path, "w") as f:
            f.write(self.get_prometheus_metrics())
        logger.info(f"Wrote metrics to {path}")

    def reset_metrics(self, phase: Optional[str] = None):
        """Reset the aggregates of one phase or of all phases."""
        if phase:
            if phase in self.phase_metrics:
                self.phase_metrics[phase] = PhaseMetrics(phase)
            logger.info(f"Reset metrics for phase '{phase}'")
        else:
            self.phase_metrics = {name: PhaseMetrics(name) for name in PHASES}
            self.stored_examples = 0
            self.started_at = datetime.now()
            logger.info("Reset all metrics")
