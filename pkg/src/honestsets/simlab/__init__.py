"""Simulation harness: designs, the replicate runner, aggregation and output."""
from .design import build_covariance, sample_dataset
from .grid import dense_grid, full_grid, sparse_grid
from .output import emit_outputs, read_trials
from .runner import SimConfig, TrialRecord, aggregate, run_grid, run_setting

__all__ = ["SimConfig", "TrialRecord", "aggregate", "build_covariance", "dense_grid", "emit_outputs",
           "full_grid", "read_trials", "run_grid", "run_setting", "sample_dataset", "sparse_grid"]
