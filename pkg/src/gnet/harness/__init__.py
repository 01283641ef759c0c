"""Experiment configuration, runners, reports and the command line."""

from .config import ExperimentConfig, Problem, TauSource, build_problem
from .reports import StudyReport, read_csv
from .studies import run_check_partition, run_oos_study, run_quad_study, run_rate_study, run_synth

__all__ = [
    "ExperimentConfig", "Problem", "TauSource", "build_problem", "StudyReport", "read_csv",
    "run_check_partition", "run_oos_study", "run_quad_study", "run_rate_study", "run_synth",
]
