"""Experiment orchestration: configuration, pipeline runs, SNR sweeps, continual learning."""

from .config import ExperimentConfig, load_config, reference_markdown
from .continual import ContinualResult, continual_experiment
from .manifest import RunManifest
from .pipeline import Trace, run_pipeline
from .sweep import SweepResult, snr_sweep

__all__ = [
    "ContinualResult",
    "ExperimentConfig",
    "RunManifest",
    "SweepResult",
    "Trace",
    "continual_experiment",
    "load_config",
    "reference_markdown",
    "run_pipeline",
    "snr_sweep",
]
