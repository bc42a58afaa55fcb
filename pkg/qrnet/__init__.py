# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

__version__ = "0.1.0"

from . import serialization  # registers the numpy and bounds codecs with draccus
from .experiment import ExperimentConfig, emit_report, run_experiment
from .lqr import LqrSolution, design_lqr, solve_riccati
from .models import DynamicsModel, ModelConfig, load_model_config
from .policies import ArchitectureKind, QRnetPolicy, load_checkpoint, save_checkpoint
from .utils import ConfigError, ConvergenceError, DimensionError, NumericalError, QrnetError


__all__ = [
    "ArchitectureKind",
    "ConfigError",
    "ConvergenceError",
    "DimensionError",
    "DynamicsModel",
    "ExperimentConfig",
    "LqrSolution",
    "ModelConfig",
    "NumericalError",
    "QRnetPolicy",
    "QrnetError",
    "design_lqr",
    "emit_report",
    "load_checkpoint",
    "load_model_config",
    "run_experiment",
    "save_checkpoint",
    "serialization",
    "solve_riccati",
]
