"""Reproducible named experiments: configs, registry, records and CLI."""
from .config import ExperimentConfig, load_config
from .experiments import REGISTRY, Experiment, get_experiment
from .records import ResultRecord, load_records, report, run_experiment

__all__ = ["ExperimentConfig", "load_config", "REGISTRY", "Experiment", "get_experiment",
           "ResultRecord", "load_records", "report", "run_experiment"]
