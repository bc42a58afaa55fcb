# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

from .base import ControlBounds, CostQuadratic, DynamicsModel, EquilibriumPair, SystemLinearization
from .burgers import BurgersConfig, BurgersModel
from .chebyshev import chebyshev_diff_matrix, clenshaw_curtis_weights
from .config import ModelConfig, load_model_config, model_config_from_dict, model_config_to_dict
from .linear import LinearConfig, LinearQuadraticModel, double_integrator_config, identity_config, scalar_config
from .sampling import BoxDomain, SamplingDomain, SineSeriesDomain, SphereDomain, sample_initial_conditions
from .uav import (
    UavConfig,
    UavDomain,
    UavModel,
    UavParams,
    aero_coefficients,
    compute_trim,
    euler_to_quaternion,
    forces_moments,
    load_uav_params,
    quat_kinematics,
)


__all__ = [
    "BoxDomain",
    "BurgersConfig",
    "BurgersModel",
    "ControlBounds",
    "CostQuadratic",
    "DynamicsModel",
    "EquilibriumPair",
    "LinearConfig",
    "LinearQuadraticModel",
    "ModelConfig",
    "SamplingDomain",
    "SineSeriesDomain",
    "SphereDomain",
    "SystemLinearization",
    "UavConfig",
    "UavDomain",
    "UavModel",
    "UavParams",
    "aero_coefficients",
    "chebyshev_diff_matrix",
    "clenshaw_curtis_weights",
    "compute_trim",
    "double_integrator_config",
    "euler_to_quaternion",
    "forces_moments",
    "identity_config",
    "load_model_config",
    "load_uav_params",
    "model_config_from_dict",
    "model_config_to_dict",
    "quat_kinematics",
    "sample_initial_conditions",
    "scalar_config",
]
