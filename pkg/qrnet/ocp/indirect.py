# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Indirect open-loop solves: the two-point boundary value problem of the minimum principle.

The unknowns are `(x, lam, J)` on `[0, T]` with `x(0) = x0`, `lam(T) = 0` and `J(0) = 0`, where `J' = L(x, u*)`
accumulates the cost. `scipy.integrate.solve_bvp` does the collocation, damped Newton and mesh refinement. The
horizon is doubled until the state has settled and the cost stops changing.
"""
from dataclasses import dataclass
from functools import partial
from logging import getLogger
from typing import Optional

import numpy as np
from scipy.integrate import solve_bvp

from qrnet.lqr import LqrSolution, design_lqr
from qrnet.models.base import DynamicsModel
from qrnet.ocp.hamiltonian import minimize_hamiltonian, pmp_rhs
from qrnet.ocp.trajectory import (
    ExtremalTrajectory,
    accumulated_cost,
    constant_trajectory,
    lqr_costate_guess,
    lqr_rollout,
    resample,
)
from qrnet.utils import ConfigError

logger = getLogger(__name__)


@dataclass
class IndirectSettings:
    # initial horizon; the model's default when unset
    horizon: Optional[float] = None
    growth: float = 2.0
    # the horizon never exceeds horizon * growth ** max_extensions
    max_extensions: int = 10
    nodes: int = 60
    max_initial_nodes: int = 480
    # solve_bvp's own mesh limit
    max_mesh: int = 20000
    tol: float = 1e-7
    bc_tol: float = 1e-8
    settle_ratio: float = 1e-3
    cost_rtol: float = 1e-3
    # accepted trajectories keep max|H(t) - H(0)| <= hamiltonian_rtol * (1 + |H(0)|)
    hamiltonian_rtol: float = 1e-5

    def validate(self) -> None:
        if self.growth <= 1.0:
            raise ConfigError(f"horizon growth must exceed 1, got {self.growth}")
        if self.nodes < 3 or self.max_initial_nodes < self.nodes:
            raise ConfigError(f"need 3 <= nodes <= max_initial_nodes, got {self.nodes} and {self.max_initial_nodes}")
        if self.hamiltonian_rtol <= 0.0:
            raise ConfigError(f"Hamiltonian tolerance must be positive, got {self.hamiltonian_rtol}")
        if self.tol <= 0.0 or self.bc_tol <= 0.0:
            raise ConfigError("BVP tolerances must be positive")


class _Bvp:
    def __init__(self, model: DynamicsModel, x0: np.ndarray):
        self.model = model
        self.x0 = x0
        self.n = model.n_states

    def fun(self, _, y):
        n = self.n
        x, lam = y[:n].T, y[n : 2 * n].T
        x_dot, lam_dot = pmp_rhs(self.model, x, lam)
        u = minimize_hamiltonian(self.model, x, lam)
        cost_rate = self.model.state_cost(x) + self.model.control_cost(u)
        return np.concatenate([x_dot.T, lam_dot.T, cost_rate[None, :]], axis=0)

    def bc(self, ya, yb):
        n = self.n
        return np.concatenate([ya[:n] - self.x0, yb[n : 2 * n], ya[2 * n : 2 * n + 1]])


def _initial_guess(model, solution, x0, horizon, nodes):
    t = np.linspace(0.0, horizon, nodes)
    x, u = lqr_rollout(model, solution, x0, t)
    lam = lqr_costate_guess(model, solution, x)
    lam[-1] = 0.0
    cost = accumulated_cost(model, t, x, u)
    return t, np.concatenate([x.T, lam.T, cost[None, :]], axis=0)


def _extend(sol, horizon: float, nodes: int, n: int):
    """Warm start on `[0, horizon]` from a solution on a shorter horizon, holding its final state."""
    t = np.linspace(0.0, horizon, nodes)
    y = resample(sol.x, sol.y.T, t).T
    y[n : 2 * n, t > sol.x[-1]] = 0.0
    return t, y


def _solve_fixed_horizon(bvp: _Bvp, t, y, settings: IndirectSettings, refine_guess):
    """solve_bvp from the guess, restarting on denser initial meshes up to `max_initial_nodes`."""
    nodes = len(t)
    while True:
        sol = solve_bvp(bvp.fun, bvp.bc, t, y, tol=settings.tol, bc_tol=settings.bc_tol, max_nodes=settings.max_mesh)
        if sol.success:
            return sol
        logger.debug(f"solve_bvp failed on {nodes} initial nodes: {sol.message}")
        nodes *= 2
        if nodes > settings.max_initial_nodes:
            return sol
        t, y = refine_guess(nodes)


def _trajectory(model: DynamicsModel, sol, converged: bool, reason: str, horizon: float) -> ExtremalTrajectory:
    n = model.n_states
    x = model.project(sol.y[:n].T)
    lam = sol.y[n : 2 * n].T
    u = minimize_hamiltonian(model, x, lam)
    with np.errstate(all="ignore"):
        H = model.state_cost(x) + model.control_cost(u) + np.sum(lam * model.rhs(x, u), axis=-1)
    residual = float(np.max(sol.rms_residuals)) if len(sol.rms_residuals) else 0.0
    diagnostics = {
        "horizon": horizon,
        "nodes": len(sol.x),
        "bvp_residual": residual,
        "hamiltonian_drift": float(np.max(np.abs(H - H[0]))),
        "hamiltonian_initial": float(H[0]),
        "hamiltonian_max": float(np.max(np.abs(H))),
        "final_error": float(model.state_error(x[-1])),
    }
    return ExtremalTrajectory(sol.x, x, u, float(sol.y[2 * n, -1]), converged, lam, reason, diagnostics)


def _accept(model: DynamicsModel, sol, horizon: float, hamiltonian_rtol: float) -> ExtremalTrajectory:
    """The converged trajectory, or a rejected one when the Hamiltonian is not constant along it."""
    traj = _trajectory(model, sol, True, "", horizon)
    drift = traj.diagnostics["hamiltonian_drift"]
    limit = hamiltonian_rtol * (1.0 + abs(traj.diagnostics["hamiltonian_initial"]))
    if not drift <= limit:
        traj.converged = False
        traj.reason = f"Hamiltonian drift {drift:.3e} exceeds {limit:.3e}"
        logger.debug(f"Rejecting trajectory at horizon {horizon:g}: {traj.reason}")
    return traj


def solve_open_loop_indirect(
    model: DynamicsModel,
    x0: np.ndarray,
    settings: Optional[IndirectSettings] = None,
    solution: Optional[LqrSolution] = None,
) -> ExtremalTrajectory:
    """Solves the minimum-principle BVP from `x0` with horizon continuation.

    Never raises on solver failure: the returned trajectory has `converged = False` and a `reason`.
    """
    settings = settings or IndirectSettings()
    settings.validate()
    x0 = model.project(np.asarray(x0, dtype=float))
    n = model.n_states
    if model.state_error(x0) == 0.0:
        return constant_trajectory(model, x0, with_costate=True)
    solution = solution or design_lqr(model)
    bvp = _Bvp(model, x0)
    initial_error = float(model.state_error(x0))

    horizon = settings.horizon or model.horizon
    cap = horizon * settings.growth**settings.max_extensions
    t, y = _initial_guess(model, solution, x0, horizon, settings.nodes)
    previous_cost = None
    previous = None
    while True:
        sol = _solve_fixed_horizon(bvp, t, y, settings, partial(_initial_guess, model, solution, x0, horizon))
        if not sol.success:
            if previous is not None:
                logger.debug(f"BVP failed at horizon {horizon:g}: {sol.message}")
                return _trajectory(model, previous[0], False, f"solve_bvp failed at horizon {horizon:g}", previous[1])
            return _trajectory(model, sol, False, f"solve_bvp failed: {sol.message}", horizon)

        cost = float(sol.y[2 * n, -1])
        settled = model.state_error(sol.y[:n, -1]) <= settings.settle_ratio * initial_error
        steady = previous_cost is not None and abs(cost - previous_cost) <= settings.cost_rtol * abs(cost)
        logger.debug(f"horizon {horizon:g}: cost {cost:.8g}, settled {settled}, nodes {len(sol.x)}")
        if settled and steady:
            return _accept(model, sol, horizon, settings.hamiltonian_rtol)
        if horizon * settings.growth > cap * (1.0 + 1e-12):
            return _trajectory(model, sol, False, f"horizon cap {cap:g} reached", horizon)

        previous_cost, previous = cost, (sol, horizon)
        horizon *= settings.growth
        t, y = _extend(sol, horizon, max(settings.nodes, len(sol.x)), n)
