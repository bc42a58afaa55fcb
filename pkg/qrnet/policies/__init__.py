# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

from .architectures import (
    Anchor,
    ArchitectureKind,
    InputScaling,
    PolicyCheckpoint,
    QRnetPolicy,
    control_from_value_gradient,
    eval_control_model,
    eval_value_gradient_model,
    finalize_checkpoint,
    load_checkpoint,
    model_anchor,
    output_dim,
    parameter_count,
    parse_kind,
    policy_state_jacobian,
    save_checkpoint,
    table_parameter_count,
)
from .mlp import (
    MlpLayer,
    MlpParams,
    init_mlp,
    mlp_forward,
    mlp_input_jacobian,
    mlp_jacobian_param_gradient,
    mlp_param_gradient,
)
from .saturation import SmoothSatConstants, saturation_constants, smooth_saturation, smooth_saturation_with_derivative


__all__ = [
    "Anchor",
    "ArchitectureKind",
    "InputScaling",
    "MlpLayer",
    "MlpParams",
    "PolicyCheckpoint",
    "QRnetPolicy",
    "SmoothSatConstants",
    "control_from_value_gradient",
    "eval_control_model",
    "eval_value_gradient_model",
    "finalize_checkpoint",
    "init_mlp",
    "load_checkpoint",
    "mlp_forward",
    "mlp_input_jacobian",
    "mlp_jacobian_param_gradient",
    "mlp_param_gradient",
    "model_anchor",
    "output_dim",
    "parameter_count",
    "parse_kind",
    "policy_state_jacobian",
    "save_checkpoint",
    "saturation_constants",
    "smooth_saturation",
    "smooth_saturation_with_derivative",
    "table_parameter_count",
]
