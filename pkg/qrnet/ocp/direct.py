# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Direct open-loop solves by compressed Hermite-Simpson collocation.

On a uniform grid `t_0 < ... < t_K` with step `h`, the decision variables are the node states `x_1..x_K` (`x_0` is
fixed) and node controls `u_0..u_K`; midpoint controls interpolate linearly. Each interval contributes the defect

    x_m = (x_k + x_{k+1}) / 2 + h (f_k - f_{k+1}) / 8
    zeta_k = x_{k+1} - x_k - h (f_k + 4 f_m + f_{k+1}) / 6

and the Simpson cost `h (L_k + 4 L_m + L_{k+1}) / 6`. An augmented Lagrangian outer loop drives the defects to zero
around L-BFGS-B inner solves that keep the controls exactly inside their box. Gradients are exact
vector-Jacobian products through the transcription.
"""
from dataclasses import dataclass
from logging import getLogger
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from qrnet.lqr import LqrSolution, design_lqr
from qrnet.models.base import DynamicsModel
from qrnet.ocp.trajectory import ExtremalTrajectory, constant_trajectory, lqr_rollout, resample
from qrnet.utils import ConfigError

logger = getLogger(__name__)


@dataclass
class DirectSettings:
    horizon: Optional[float] = None
    growth: float = 2.0
    max_extensions: int = 10
    # collocation intervals on the initial horizon; longer horizons keep the density up to max_intervals
    intervals: int = 48
    max_intervals: int = 384
    defect_tol: float = 1e-6
    penalty: float = 10.0
    penalty_growth: float = 10.0
    max_outer: int = 20
    max_inner: int = 3000
    settle_ratio: float = 1e-3
    cost_rtol: float = 1e-3

    def validate(self) -> None:
        if self.growth <= 1.0:
            raise ConfigError(f"horizon growth must exceed 1, got {self.growth}")
        if self.intervals < 2 or self.max_intervals < self.intervals:
            raise ConfigError(f"need 2 <= intervals <= max_intervals, got {self.intervals} and {self.max_intervals}")
        if self.defect_tol <= 0.0 or self.penalty <= 0.0 or self.penalty_growth <= 1.0:
            raise ConfigError("defect tolerance and penalty must be positive and the penalty growth above 1")


def _transpose_product(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    """`M_k' v_k` for stacks of matrices."""
    return np.einsum("kji,kj->ki", M, v)


class HermiteSimpson:
    """The transcription of one fixed-horizon problem from `x0`."""

    def __init__(self, model: DynamicsModel, x0: np.ndarray, horizon: float, intervals: int):
        self.model = model
        self.x0 = np.asarray(x0, dtype=float)
        self.K = intervals
        self.t = np.linspace(0.0, horizon, intervals + 1)
        self.h = horizon / intervals
        self.n, self.m = model.n_states, model.n_controls

    def split(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n_x = self.K * self.n
        X = np.vstack([self.x0, z[:n_x].reshape(self.K, self.n)])
        U = z[n_x:].reshape(self.K + 1, self.m)
        return X, U

    def join(self, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        return np.concatenate([X[1:].ravel(), U.ravel()])

    def bounds(self):
        lo = [None if not np.isfinite(v) else float(v) for v in self.model.bounds.u_min]
        hi = [None if not np.isfinite(v) else float(v) for v in self.model.bounds.u_max]
        return [(None, None)] * (self.K * self.n) + list(zip(lo, hi)) * (self.K + 1)

    def _midpoints(self, X, U, f):
        h = self.h
        xm = 0.5 * (X[:-1] + X[1:]) + (h / 8.0) * (f[:-1] - f[1:])
        um = 0.5 * (U[:-1] + U[1:])
        return xm, um

    def defects(self, z: np.ndarray) -> np.ndarray:
        X, U = self.split(z)
        f = self.model.rhs(X, U)
        xm, um = self._midpoints(X, U, f)
        fm = self.model.rhs(xm, um)
        return X[1:] - X[:-1] - (self.h / 6.0) * (f[:-1] + 4.0 * fm + f[1:])

    def cost(self, z: np.ndarray) -> float:
        X, U = self.split(z)
        f = self.model.rhs(X, U)
        xm, um = self._midpoints(X, U, f)
        L = self.model.state_cost(X) + self.model.control_cost(U)
        Lm = self.model.state_cost(xm) + self.model.control_cost(um)
        return float((self.h / 6.0) * np.sum(L[:-1] + 4.0 * Lm + L[1:]))

    def merit(self, z: np.ndarray, nu: np.ndarray, rho: float) -> Tuple[float, np.ndarray]:
        """Augmented Lagrangian `J + nu'zeta + rho |zeta|^2 / 2` and its gradient."""
        model, h = self.model, self.h
        X, U = self.split(z)
        f = model.rhs(X, U)
        A = model.state_jacobian(X, U)
        B = model.control_matrix(X)
        xm, um = self._midpoints(X, U, f)
        fm = model.rhs(xm, um)
        Am = model.state_jacobian(xm, um)
        Bm = model.control_matrix(xm)

        L = model.state_cost(X) + model.control_cost(U)
        Lm = model.state_cost(xm) + model.control_cost(um)
        cost = (h / 6.0) * np.sum(L[:-1] + 4.0 * Lm + L[1:])
        zeta = X[1:] - X[:-1] - (h / 6.0) * (f[:-1] + 4.0 * fm + f[1:])
        mu = nu + rho * zeta
        value = cost + np.sum(nu * zeta) + 0.5 * rho * np.sum(zeta * zeta)

        lx, lu = model.cost_state_gradient(X), model.control_cost_gradient(U)
        y = (2.0 * h / 3.0) * (model.cost_state_gradient(xm) - _transpose_product(Am, mu))
        w = (h / 3.0) * (model.control_cost_gradient(um) - _transpose_product(Bm, mu))

        gX = np.zeros_like(X)
        gU = np.zeros_like(U)
        gX[:-1] += (h / 6.0) * (lx[:-1] - _transpose_product(A[:-1], mu)) - mu
        gX[1:] += (h / 6.0) * (lx[1:] - _transpose_product(A[1:], mu)) + mu
        gU[:-1] += (h / 6.0) * (lu[:-1] - _transpose_product(B[:-1], mu))
        gU[1:] += (h / 6.0) * (lu[1:] - _transpose_product(B[1:], mu))
        # through the midpoint state and control
        gX[:-1] += 0.5 * y + (h / 8.0) * _transpose_product(A[:-1], y)
        gX[1:] += 0.5 * y - (h / 8.0) * _transpose_product(A[1:], y)
        gU[:-1] += (h / 8.0) * _transpose_product(B[:-1], y) + w
        gU[1:] += -(h / 8.0) * _transpose_product(B[1:], y) + w
        return float(value), self.join(gX, gU)


def _solve_fixed_horizon(problem: HermiteSimpson, z0: np.ndarray, settings: DirectSettings):
    nu = np.zeros((problem.K, problem.n))
    rho = settings.penalty
    z = z0
    bounds = problem.bounds()
    violation = np.inf
    for outer in range(1, settings.max_outer + 1):
        result = minimize(
            problem.merit,
            z,
            args=(nu, rho),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": settings.max_inner, "ftol": 1e-15, "gtol": 1e-10, "maxcor": 10},
        )
        if not np.all(np.isfinite(result.x)):
            return z, violation, outer, "non-finite iterate"
        z = result.x
        zeta = problem.defects(z)
        previous, violation = violation, float(np.max(np.abs(zeta)))
        logger.debug(f"ALM outer {outer}: max defect {violation:.3e}, penalty {rho:g}, inner {result.nit} iterations")
        if violation <= settings.defect_tol:
            return z, violation, outer, ""
        nu = nu + rho * zeta
        if violation > 0.25 * previous:
            rho *= settings.penalty_growth
    return z, violation, settings.max_outer, f"defects stalled at {violation:.3e}"


def _trajectory(model, problem, z, converged, reason, violation, outer, horizon) -> ExtremalTrajectory:
    X, U = problem.split(z)
    diagnostics = {
        "horizon": horizon,
        "intervals": problem.K,
        "max_defect": violation,
        "outer_iterations": outer,
        "final_error": float(model.state_error(X[-1])),
    }
    return ExtremalTrajectory(problem.t, model.project(X), U, problem.cost(z), converged, None, reason, diagnostics)


def solve_open_loop_direct(
    model: DynamicsModel,
    x0: np.ndarray,
    settings: Optional[DirectSettings] = None,
    solution: Optional[LqrSolution] = None,
) -> ExtremalTrajectory:
    """Solves the open-loop problem from `x0` by Hermite-Simpson collocation with horizon continuation.

    Costates are not produced. Failures are reported through `converged = False` and `reason`.
    """
    settings = settings or DirectSettings()
    settings.validate()
    x0 = model.project(np.asarray(x0, dtype=float))
    if model.state_error(x0) == 0.0:
        return constant_trajectory(model, x0, with_costate=False)
    solution = solution or design_lqr(model)
    initial_error = float(model.state_error(x0))

    base = settings.horizon or model.horizon
    horizon = base
    cap = base * settings.growth**settings.max_extensions
    problem = HermiteSimpson(model, x0, horizon, settings.intervals)
    X, U = lqr_rollout(model, solution, x0, problem.t)
    z = problem.join(X, model.bounds.clip(U))
    previous_cost = None
    while True:
        z, violation, outer, reason = _solve_fixed_horizon(problem, z, settings)
        if reason:
            return _trajectory(model, problem, z, False, reason, violation, outer, horizon)
        X, U = problem.split(z)
        cost = problem.cost(z)
        settled = model.state_error(X[-1]) <= settings.settle_ratio * initial_error
        steady = previous_cost is not None and abs(cost - previous_cost) <= settings.cost_rtol * abs(cost)
        logger.debug(f"horizon {horizon:g}: cost {cost:.8g}, settled {settled}")
        if settled and steady:
            return _trajectory(model, problem, z, True, "", violation, outer, horizon)
        if horizon * settings.growth > cap * (1.0 + 1e-12):
            return _trajectory(model, problem, z, False, f"horizon cap {cap:g} reached", violation, outer, horizon)

        previous_cost = cost
        old_t = problem.t
        horizon *= settings.growth
        intervals = min(settings.max_intervals, int(round(settings.intervals * horizon / base)))
        problem = HermiteSimpson(model, x0, horizon, intervals)
        z = problem.join(resample(old_t, X, problem.t), resample(old_t, U, problem.t))
