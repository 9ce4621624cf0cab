"""Experiment orchestration, multi-stage sorting and cost predictions."""

from .costs import PredictedCost, ams_practical_sample, group_count, predicted_costs
from .experiment import (
    CSV_HEADER, ExperimentConfig, OracleViolation, ResultRow, parse_sweep, run_experiment, sweep,
)
from .multistage import multistage_sort, stage_epsilon

__all__ = [
    "CSV_HEADER", "ExperimentConfig", "OracleViolation", "PredictedCost", "ResultRow",
    "ams_practical_sample", "group_count", "multistage_sort", "parse_sweep", "predicted_costs",
    "run_experiment", "stage_epsilon", "sweep",
]
