"""Logging setup and workload metrics."""
