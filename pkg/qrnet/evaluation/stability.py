# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Local stability of closed loops, analysed in the model's reduced coordinates."""
from dataclasses import dataclass, field
from logging import getLogger
from typing import List, Optional

import numpy as np
from scipy import linalg

from qrnet.models.base import DynamicsModel
from qrnet.utils import ConvergenceError, DimensionError, NumericalError, fd_jacobian

logger = getLogger(__name__)

NEWTON_TOL = 1e-10
MAX_NEWTON_ITERATIONS = 100
MAX_HALVINGS = 30


@dataclass
class EquilibriumSearch:
    x: np.ndarray
    offset: float
    residual: float
    iterations: int
    history: List[float] = field(default_factory=list)


@dataclass
class LinearStability:
    abscissa: float
    equilibrium: np.ndarray
    offset: Optional[float]
    residual: float
    equilibrium_found: bool
    # abscissa of the LQR closed loop at x_f, for reference
    lqr_abscissa: Optional[float] = None
    message: str = ""

    @property
    def stable(self) -> bool:
        return self.abscissa < 0.0


def spectral_abscissa(matrix: np.ndarray) -> float:
    """Largest real part of the spectrum.

    >>> spectral_abscissa(np.diag([-1.0, -2.0]))
    -1.0
    """
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"spectral abscissa needs a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DimensionError("matrix contains non-finite entries")
    try:
        eigenvalues = linalg.eigvals(M)
    except linalg.LinAlgError as e:
        raise NumericalError(f"eigenvalue iteration failed: {e}") from e
    return float(np.max(eigenvalues.real))


def closed_loop_residual(model: DynamicsModel, policy, z: np.ndarray) -> np.ndarray:
    """Reduced-coordinate rates `z'` of the closed loop at the reduced points `z`."""
    x = model.from_reduced(z)
    return model.reduced_rhs(x, policy(x))


def closed_loop_jacobian(model: DynamicsModel, policy, x: np.ndarray) -> np.ndarray:
    """`A + B du/dz` at `(x, policy(x))`, in reduced coordinates."""
    x = np.asarray(x, dtype=float)
    u = policy(x)
    linearization = model.linearize_reduced(x, u)
    return linearization.A + linearization.B @ np.atleast_2d(policy.reduced_jacobian(x))


def fd_closed_loop_jacobian(model: DynamicsModel, policy, x: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference counterpart of `closed_loop_jacobian`."""
    return fd_jacobian(lambda z: closed_loop_residual(model, policy, z), model.to_reduced(x), rel_step)


def find_closed_loop_equilibrium(
    model: DynamicsModel,
    policy,
    x_guess: Optional[np.ndarray] = None,
    tol: float = NEWTON_TOL,
    max_iterations: int = MAX_NEWTON_ITERATIONS,
) -> EquilibriumSearch:
    """Damped Newton on the reduced closed-loop rates, started from `x_guess` (the goal by default).

    Raises:
        ConvergenceError: the residual does not reach `tol (1 + |z|_inf)` within `max_iterations`.
    """
    x_f = model.equilibrium.x_f
    z = model.to_reduced(x_f if x_guess is None else model.project(np.asarray(x_guess, dtype=float)))
    g = closed_loop_residual(model, policy, z)
    norm = float(np.max(np.abs(g)))
    history = [norm]
    for iteration in range(max_iterations + 1):
        if norm <= tol * (1.0 + np.max(np.abs(z))):
            x = model.from_reduced(z)
            offset = float(model.state_error(x))
            logger.debug(f"closed-loop equilibrium after {iteration} Newton steps, offset {offset:.3e}")
            return EquilibriumSearch(x, offset, norm, iteration, history)
        if iteration == max_iterations:
            break
        J = closed_loop_jacobian(model, policy, model.from_reduced(z))
        try:
            step = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -g, rcond=None)[0]
        scale = 1.0
        for _ in range(MAX_HALVINGS):
            candidate = z + scale * step
            g_new = closed_loop_residual(model, policy, candidate)
            norm_new = float(np.max(np.abs(g_new)))
            if np.isfinite(norm_new) and norm_new < norm:
                break
            scale *= 0.5
        else:
            raise ConvergenceError("closed-loop equilibrium search stalled", norm, history)
        z, g, norm = candidate, g_new, norm_new
        history.append(norm)
    raise ConvergenceError(f"no closed-loop equilibrium within {max_iterations} Newton steps", norm, history)


def linear_stability(model: DynamicsModel, policy, lqr_abscissa: Optional[float] = None) -> LinearStability:
    """Equilibrium search, Jacobian and spectral abscissa in one go.

    When no equilibrium is found the Jacobian is taken at the goal and `equilibrium_found` is False.
    """
    try:
        search = find_closed_loop_equilibrium(model, policy)
        x, offset, residual, found, message = search.x, search.offset, search.residual, True, ""
    except ConvergenceError as e:
        logger.warning(f"No closed-loop equilibrium found: {e}")
        x, offset, residual, found, message = model.equilibrium.x_f, None, e.residual, False, str(e)
    abscissa = spectral_abscissa(closed_loop_jacobian(model, policy, x))
    logger.info(f"Closed-loop abscissa {abscissa:.6f}, equilibrium offset {offset}")
    return LinearStability(abscissa, np.asarray(x), offset, residual, found, lqr_abscissa, message)
