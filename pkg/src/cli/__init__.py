"""Command line front end and run reports."""

from .main import build_parser, main
from .reports import RunReport, run_train_eval

__all__ = ["build_parser", "main", "RunReport", "run_train_eval"]
