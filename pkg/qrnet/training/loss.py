# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Supervised loss of every architecture and its exact parameter gradient.

The loss is the mean squared control error `mean_i |u_hat(x_i) - u*_i|^2`, plus `lam_weight` times the mean
squared costate error for value-gradient kinds. Gradients are assembled from the network's own backpropagation:
a seed on the network output at the data points, a seed on the output at `x_f` (the subtracted `N(x_f)`) and, for
the Jacobian kinds, a seed on `dN/dz(x_f)`.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from qrnet.models.base import DynamicsModel
from qrnet.policies.architectures import (
    Anchor,
    ArchitectureKind,
    PolicyCheckpoint,
    QRnetPolicy,
    architecture_forward,
    network_goal_terms,
)
from qrnet.policies.mlp import MlpParams, mlp_jacobian_param_gradient, mlp_param_gradient
from qrnet.policies.saturation import SmoothSatConstants, saturation_constants, smooth_saturation_with_derivative
from qrnet.utils import ConfigError, DimensionError


@dataclass(eq=False)
class TrainBatch:
    """Training records on full states. `lam` is on the reduced coordinates; `B` is `B(x)[dims]` (lam-kinds)."""

    x: np.ndarray  # (N, n_full)
    u: np.ndarray  # (N, m)
    lam: Optional[np.ndarray] = None  # (N, n)
    B: Optional[np.ndarray] = None  # (N, n, m)

    def __len__(self) -> int:
        return self.x.shape[0]

    def take(self, rows: np.ndarray) -> "TrainBatch":
        return TrainBatch(
            self.x[rows],
            self.u[rows],
            None if self.lam is None else self.lam[rows],
            None if self.B is None else self.B[rows],
        )


@dataclass(frozen=True, eq=False)
class LossContext:
    kind: ArchitectureKind
    anchor: Anchor
    sat: SmoothSatConstants
    control_weight_inv: np.ndarray
    lam_weight: float = 0.0


def make_batch(model: DynamicsModel, kind: ArchitectureKind, x, u, lam=None) -> TrainBatch:
    """Validates the records and precomputes `B(x)` on the reduced coordinates for value-gradient kinds."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if x.shape[0] == 0:
        raise DimensionError("training data is empty")
    if x.shape != (u.shape[0], model.n_states) or u.shape[1] != model.n_controls:
        raise DimensionError(f"records have shapes {x.shape} and {u.shape} for model {model.name}")
    dims = model.reduced_indices
    if lam is not None:
        lam = np.atleast_2d(np.asarray(lam, dtype=float))
        if lam.shape != (x.shape[0], len(dims)):
            raise DimensionError(f"costates must have shape {(x.shape[0], len(dims))}, got {lam.shape}")
    B = np.asarray(model.control_matrix(x), dtype=float)[:, dims, :] if kind.value_gradient else None
    return TrainBatch(x, u, lam, B)


def make_context(model: DynamicsModel, kind: ArchitectureKind, anchor: Anchor, lam_weight: float = 0.0) -> LossContext:
    if lam_weight < 0.0:
        raise ConfigError(f"costate loss weight must be non-negative, got {lam_weight}")
    if lam_weight > 0.0 and not kind.value_gradient:
        raise ConfigError(f"a costate loss weight needs a value-gradient architecture, not {kind.name}")
    sat = saturation_constants(anchor.bounds, anchor.u_f)
    return LossContext(kind, anchor, sat, np.atleast_2d(model.control_weight_inv), lam_weight)


def mean_squared_error(predicted: np.ndarray, target: np.ndarray) -> float:
    """Mean over records of the squared l2 error.

    >>> mean_squared_error(np.array([[3.0, 4.0]]), np.zeros((1, 2)))
    25.0
    """
    residual = np.atleast_2d(predicted) - np.atleast_2d(target)
    return float(np.sum(residual**2) / residual.shape[0])


def relative_mean_l2(predicted: np.ndarray, target: np.ndarray) -> float:
    """Mean l2 error over the largest target norm.

    >>> relative_mean_l2(np.array([[3.0, 4.0], [1.0, 0.0]]), np.array([[3.0, 4.0], [0.0, 0.0]]))
    0.1
    """
    predicted, target = np.atleast_2d(predicted), np.atleast_2d(target)
    if target.shape[0] == 0:
        raise DimensionError("relative error of an empty test set")
    scale = float(np.max(np.linalg.norm(target, axis=1)))
    if scale <= 0.0:
        raise DimensionError("relative error is undefined: every target control is zero")
    return float(np.mean(np.linalg.norm(predicted - target, axis=1)) / scale)


def rm_l2(checkpoint: PolicyCheckpoint, x: np.ndarray, u: np.ndarray, model: Optional[DynamicsModel] = None) -> float:
    """Relative mean l2 control error of a checkpoint on test records."""
    policy = QRnetPolicy(checkpoint, model)
    return relative_mean_l2(policy(np.atleast_2d(x)), u)


def _predict(params: MlpParams, batch: TrainBatch, context: LossContext):
    kind, anchor = context.kind, context.anchor
    N_f, J_f = network_goal_terms(kind, params, anchor)
    forward = architecture_forward(kind, params, anchor, batch.x, N_f, J_f)
    if kind.value_gradient:
        lam = forward.output
        raw = anchor.u_f - 0.5 * np.einsum("ki,kim->km", lam, batch.B) @ context.control_weight_inv.T
        u = anchor.bounds.clip(raw)
        slope = anchor.bounds.interior_mask(raw).astype(float)
    else:
        u, slope = smooth_saturation_with_derivative(forward.output, anchor.bounds, anchor.u_f, context.sat)
    return forward, u, slope


def loss_and_gradient(
    params: MlpParams, batch: TrainBatch, context: LossContext, with_gradient: bool = True
) -> Tuple[float, Optional[np.ndarray]]:
    """Loss on `batch` and, unless `with_gradient` is False, its flat gradient in `params.flatten()` order."""
    kind, anchor = context.kind, context.anchor
    count = len(batch)
    forward, u_hat, slope = _predict(params, batch, context)
    residual = u_hat - batch.u
    value = float(np.sum(residual**2) / count)
    lam_residual = None
    if context.lam_weight > 0.0:
        if batch.lam is None:
            raise ConfigError("a costate loss weight needs costate data")
        lam_residual = forward.output - batch.lam
        value += context.lam_weight * float(np.sum(lam_residual**2) / count)
    if not with_gradient:
        return value, None

    # seed on the architecture output (costate or pre-saturation control)
    dloss_du = (2.0 / count) * residual * slope
    if kind.value_gradient:
        seed = -0.5 * np.einsum("km,mj,kij->ki", dloss_du, context.control_weight_inv, batch.B)
        if lam_residual is not None:
            seed = seed + context.lam_weight * (2.0 / count) * lam_residual
    else:
        seed = dloss_du

    s = anchor.inputs(batch.x)
    s_f = anchor.goal_inputs()
    if kind.matrix:
        point_seed = np.einsum("kr,kj->krj", seed, forward.dz).reshape(count, -1)
    else:
        point_seed = seed
    grad = mlp_param_gradient(params, s, point_seed)
    if kind.anchored:
        grad = grad + mlp_param_gradient(params, s_f[None, :], -point_seed.sum(axis=0, keepdims=True))
    if kind.jacobian:
        S = -(seed.T @ forward.dz) / anchor.scaling.half_range
        grad = grad + mlp_jacobian_param_gradient(params, s_f[None, :], S[None])
    return value, grad


def loss(params: MlpParams, batch: TrainBatch, context: LossContext) -> float:
    return loss_and_gradient(params, batch, context, with_gradient=False)[0]
