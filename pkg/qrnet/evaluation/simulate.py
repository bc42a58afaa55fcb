# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Closed-loop simulation with simultaneous cost quadrature."""
import enum
from dataclasses import dataclass
from logging import getLogger
from typing import Callable, Optional

import numpy as np
from scipy.integrate import RK45

from qrnet.models.base import DynamicsModel
from qrnet.utils import DimensionError, check_finite

logger = getLogger(__name__)

Policy = Callable[[np.ndarray], np.ndarray]

DRIFT_WARNING = 1e-6


class Termination(enum.Enum):
    steady_state = "steady_state"
    timeout = "timeout"
    envelope_abort = "envelope_abort"


@dataclass
class SimSettings:
    # the model's default when unset
    t_max: Optional[float] = None
    rtol: float = 1e-6
    atol: float = 1e-8
    steady_tol: float = 1e-8
    max_steps: int = 1_000_000


@dataclass(eq=False)
class SimResult:
    t: np.ndarray  # (K,)
    x: np.ndarray  # (K, n)
    u: np.ndarray  # (K, m)
    cost: np.ndarray  # (K,) accumulated running cost
    termination: Termination
    final_error: float
    max_drift: float = 0.0
    message: str = ""

    @property
    def total_cost(self) -> float:
        return float(self.cost[-1])

    @property
    def converged(self) -> bool:
        return self.termination is Termination.steady_state


def is_steady(model: DynamicsModel, x: np.ndarray, u: np.ndarray, tol: float) -> bool:
    """`|f(x, u)|_inf <= tol (1 + |z|_inf)` over the rate components that vanish at an equilibrium."""
    rate = model.equilibrium_residual(x, u)
    return bool(np.max(np.abs(rate)) <= tol * (1.0 + np.max(np.abs(model.to_reduced(x)))))


def simulate_closed_loop(
    model: DynamicsModel, policy: Policy, x0: np.ndarray, settings: Optional[SimSettings] = None
) -> SimResult:
    """Integrates `x' = f(x, policy(x))` and `J' = L(x, policy(x))` from `x0` with RK45.

    The state is projected onto the model's manifold after every accepted step. Stops at a steady state, at
    `t_max`, when the model's envelope is left, or when the integrator fails (reported as `envelope_abort`).
    """
    settings = settings or SimSettings()
    n = model.n_states
    x0 = model.project(check_finite("x0", np.asarray(x0, dtype=float)))
    if x0.shape != (n,):
        raise DimensionError(f"x0 must have shape ({n},), got {x0.shape}")
    t_max = settings.t_max or model.t_max

    def closed_loop(_, y):
        x = y[:n]
        u = policy(x)
        return np.concatenate([model.rhs(x, u), [model.state_cost(x) + model.control_cost(u)]])

    u0 = policy(x0)
    ts, xs, us, costs = [0.0], [x0], [u0], [0.0]
    max_drift = 0.0

    def result(termination: Termination, message: str = "") -> SimResult:
        x_hist = np.array(xs)
        if max_drift > DRIFT_WARNING:
            logger.warning(f"State constraint drift reached {max_drift:.2e} before projection")
        logger.debug(f"Simulation ended at t={ts[-1]:g} ({termination.name}), max drift {max_drift:.2e}")
        return SimResult(
            np.array(ts),
            x_hist,
            np.array(us),
            np.array(costs),
            termination,
            float(model.state_error(x_hist[-1])),
            max_drift,
            message,
        )

    if is_steady(model, x0, u0, settings.steady_tol):
        return result(Termination.steady_state)

    solver = RK45(closed_loop, 0.0, np.concatenate([x0, [0.0]]), t_max, rtol=settings.rtol, atol=settings.atol)
    for _ in range(settings.max_steps):
        try:
            message = solver.step()
            if solver.status == "failed":
                return result(Termination.envelope_abort, f"integrator failed at t={solver.t:g}: {message}")
            x_raw = solver.y[:n]
            if not np.all(np.isfinite(solver.y)):
                return result(Termination.envelope_abort, f"non-finite state at t={solver.t:g}")
            drift = float(model.constraint_drift(x_raw))
            x = model.project(x_raw)
            if drift > 0.0:
                max_drift = max(max_drift, drift)
                solver.y = np.concatenate([x, solver.y[n:]])
                solver.f = closed_loop(solver.t, solver.y)
            u = policy(x)
        except (DimensionError, FloatingPointError, np.linalg.LinAlgError) as e:
            return result(Termination.envelope_abort, f"{type(e).__name__} at t={solver.t:g}: {e}")

        ts.append(solver.t)
        xs.append(x)
        us.append(u)
        costs.append(float(solver.y[n]))
        if model.envelope_violated(x):
            return result(Termination.envelope_abort, f"left the flight envelope at t={solver.t:g}")
        if is_steady(model, x, u, settings.steady_tol):
            break
        if solver.status == "finished":
            return result(Termination.timeout)
    else:
        return result(Termination.timeout, f"step limit {settings.max_steps} reached")

    return result(Termination.steady_state)
