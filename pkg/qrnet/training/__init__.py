# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

from qrnet.policies.architectures import InputScaling

from .fit import Optimizer, TrainReport, TrainSpec, fit, save_report
from .loss import (
    LossContext,
    TrainBatch,
    loss,
    loss_and_gradient,
    make_batch,
    make_context,
    mean_squared_error,
    relative_mean_l2,
    rm_l2,
)
from .optimizers import Adam, LbfgsResult, minimize_lbfgs


__all__ = [
    "Adam",
    "InputScaling",
    "LbfgsResult",
    "LossContext",
    "Optimizer",
    "TrainBatch",
    "TrainReport",
    "TrainSpec",
    "fit",
    "loss",
    "loss_and_gradient",
    "make_batch",
    "make_context",
    "mean_squared_error",
    "minimize_lbfgs",
    "relative_mean_l2",
    "rm_l2",
    "save_report",
]
