# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Open-loop solutions and the LQR-based initial guesses both solvers start from."""
from dataclasses import dataclass, field
from logging import getLogger
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from qrnet.lqr import LqrSolution, model_lqr_policy
from qrnet.models.base import DynamicsModel

logger = getLogger(__name__)

MAX_DATASET_NODES = 256


@dataclass(eq=False)
class ExtremalTrajectory:
    t: np.ndarray  # (K,)
    x: np.ndarray  # (K, n)
    u: np.ndarray  # (K, m)
    cost: float
    converged: bool
    lam: Optional[np.ndarray] = None  # (K, n), indirect solutions only
    reason: str = ""
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def x0(self) -> np.ndarray:
        return self.x[0]

    def final_error(self, model: DynamicsModel) -> float:
        return float(model.state_error(self.x[-1]))

    def dataset_nodes(self, limit: int = MAX_DATASET_NODES) -> np.ndarray:
        """Node indices kept in a dataset: all of them up to `limit`, uniform-in-index thinning beyond.

        >>> traj = ExtremalTrajectory(np.arange(5.0), np.zeros((5, 1)), np.zeros((5, 1)), 0.0, True)
        >>> traj.dataset_nodes(3).tolist()
        [0, 2, 4]
        """
        count = len(self.t)
        if count <= limit:
            return np.arange(count)
        return np.unique(np.round(np.linspace(0, count - 1, limit)).astype(int))


def constant_trajectory(model: DynamicsModel, x0: np.ndarray, with_costate: bool) -> ExtremalTrajectory:
    """The solution from a state already at the goal: stay put at zero cost."""
    t = np.array([0.0, model.horizon])
    x = np.tile(x0, (2, 1))
    u = np.tile(model.equilibrium.u_f, (2, 1))
    lam = np.zeros_like(x) if with_costate else None
    return ExtremalTrajectory(t, x, u, 0.0, True, lam, "at goal", {"horizon": model.horizon})


def lqr_rollout(
    model: DynamicsModel, solution: LqrSolution, x0: np.ndarray, t: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """States and controls of the saturated LQR closed loop on the grid `t`.

    Falls back to the straight line `x0 -> x_f` with `u = u_f` when the rollout fails or leaves the envelope.
    """
    policy = model_lqr_policy(model, solution)

    def closed_loop(_, x):
        return model.rhs(x, policy(x))

    try:
        result = solve_ivp(closed_loop, (t[0], t[-1]), x0, t_eval=t, rtol=1e-6, atol=1e-8)
        ok = result.success and result.y.shape[1] == len(t) and np.all(np.isfinite(result.y))
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as e:
        logger.debug(f"LQR rollout failed: {e}")
        ok = False
    if ok:
        x = model.project(result.y.T)
        if not any(model.envelope_violated(row) for row in x):
            return x, policy(x)
    logger.debug("LQR rollout unusable, falling back to linear interpolation")
    weights = np.linspace(0.0, 1.0, len(t))[:, None]
    x = model.project((1.0 - weights) * x0 + weights * model.equilibrium.x_f)
    return x, np.tile(model.equilibrium.u_f, (len(t), 1))


def lqr_costate_guess(model: DynamicsModel, solution: LqrSolution, x: np.ndarray) -> np.ndarray:
    """`2P(z - z_f)` placed on the reduced coordinates of a full costate."""
    lam = np.zeros_like(x)
    dims = model.reduced_indices
    lam[..., dims] = 2.0 * model.to_reduced(x - model.equilibrium.x_f) @ solution.P
    return lam


def accumulated_cost(model: DynamicsModel, t: np.ndarray, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    return cumulative_trapezoid(model.running_cost(x, u), t, initial=0.0)


def resample(t_old: np.ndarray, values: np.ndarray, t_new: np.ndarray) -> np.ndarray:
    """Piecewise-linear resampling of node values, holding the last value past the end."""
    return np.stack([np.interp(t_new, t_old, column) for column in np.atleast_2d(values.T)], axis=-1)
