# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Hamiltonian, its pointwise minimizer over the control box, and the characteristic (state, costate) flow.

Costates here live on the full state, `lam` in R^n.
"""
from typing import Tuple

import numpy as np

from qrnet.models.base import DynamicsModel
from qrnet.utils import as_batch


def hamiltonian(model: DynamicsModel, x: np.ndarray, lam: np.ndarray, u: np.ndarray) -> np.ndarray:
    """`L(x, u) + lam' f(x, u)`."""
    lam = as_batch(lam, model.n_states, "lam")
    return model.running_cost(x, u) + np.sum(lam * model.dynamics_rhs(x, u), axis=-1)


def minimize_hamiltonian(model: DynamicsModel, x: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """`clip(u_f - R^-1 B(x)' lam / 2)`, exact for control-affine dynamics with quadratic control cost."""
    x = np.asarray(x, dtype=float)
    lam = as_batch(lam, model.n_states, "lam")
    B = np.asarray(model.control_matrix(x), dtype=float)
    u = model.equilibrium.u_f - 0.5 * np.einsum("...i,...im->...m", lam, B) @ model.control_weight_inv.T
    return model.bounds.clip(u)


def pmp_rhs(model: DynamicsModel, x: np.ndarray, lam: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """`(x', lam')` with `u = u*(x, lam)`: `x' = f`, `lam' = -q_x - (df/dx)' lam`.

    The control-cost term drops out of `lam'` because `r` does not depend on `x`.
    """
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    u = minimize_hamiltonian(model, x, lam)
    x_dot = model.rhs(x, u)
    A = model.state_jacobian(x, u)
    lam_dot = -model.cost_state_gradient(x) - np.einsum("...ji,...j->...i", A, lam)
    return x_dot, lam_dot
