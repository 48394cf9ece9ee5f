"""Experiment harness: configuration, runs, traces, metrics and reports."""

from .config import ExperimentConfig
from .experiment import ExperimentResult, build_report, compute_references, load_traces, run_experiment
from .metrics import (AggregateStats, aggregate, consecutive_hamming, first_reach,
                      hamming_to_optimum_series, iteration_improvement, relative_gap,
                      summary_rows, value_improvement)

__all__ = ["ExperimentConfig", "ExperimentResult", "build_report", "compute_references",
           "load_traces", "run_experiment", "AggregateStats", "aggregate", "consecutive_hamming",
           "first_reach", "hamming_to_optimum_series", "iteration_improvement", "relative_gap",
           "summary_rows", "value_improvement"]
