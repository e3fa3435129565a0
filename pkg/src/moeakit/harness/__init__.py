"""Experiment orchestration: configs, seeded runs, result files and reports."""
from .config import ALGORITHMS, PRESETS, ExperimentConfig, ExperimentConfigError, build_config, load_config, parse_config
from .experiment import SCHEMA_VERSION, load_results, run_experiment
from .report import Report, ReportError, build_report, write_report

__all__ = [
    "ALGORITHMS",
    "PRESETS",
    "SCHEMA_VERSION",
    "ExperimentConfig",
    "ExperimentConfigError",
    "Report",
    "ReportError",
    "build_config",
    "build_report",
    "load_config",
    "load_results",
    "parse_config",
    "run_experiment",
    "write_report",
]
