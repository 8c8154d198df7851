"""Globally convergent observers for rigid-body pose, velocity and IMU biases."""

from .diagnostics import ErrorRecord, compute_errors, fit_exponential_rate, summarize_bias
from .dynamics import (
    MeasurementFrame,
    SensorSpec,
    SignalSpec,
    TruthState,
    benchmark_signals,
    reconstruct_pose,
    step_truth,
)
from .observer_const import ConstGains, ObserverState, check_gains, scale_gains, step_observer_const
from .observer_riccati import RiccatiState, extract_gains, step_observer_var, step_riccati
from .simulation import generate_trajectory, replay_observer, run_observer

__version__ = "0.1.0"

__all__ = [
    "ConstGains",
    "ErrorRecord",
    "MeasurementFrame",
    "ObserverState",
    "RiccatiState",
    "SensorSpec",
    "SignalSpec",
    "TruthState",
    "check_gains",
    "compute_errors",
    "extract_gains",
    "fit_exponential_rate",
    "generate_trajectory",
    "benchmark_signals",
    "reconstruct_pose",
    "replay_observer",
    "run_observer",
    "scale_gains",
    "step_observer_const",
    "step_observer_var",
    "step_riccati",
    "step_truth",
    "summarize_bias",
]
