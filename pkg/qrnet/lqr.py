# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Linear-quadratic regulator design.

With `Q`, `R` the weights of the local expansion of the running cost, the algebraic Riccati equation

    Q + A'P + PA - P B R^-1 B' P = 0

gives the quadratic value approximation `(x - x_f)'P(x - x_f)`, its gradient `2P(x - x_f)` and the feedback
`u_f - K(x - x_f)`, `K = R^-1 B'P`.
"""
from dataclasses import dataclass, field
from logging import getLogger
from typing import List, Optional

import numpy as np
from scipy import linalg

from qrnet.models.base import ControlBounds, DynamicsModel, EquilibriumPair
from qrnet.utils import ConvergenceError, DimensionError, NumericalError

logger = getLogger(__name__)

MAX_REFINEMENTS = 20


@dataclass(frozen=True, eq=False)
class LqrSolution:
    P: np.ndarray
    K: np.ndarray
    riccati_residual: float
    closed_loop_abscissa: float
    residual_history: List[float] = field(default_factory=list)


def riccati_residual(A, B, Q, R, P) -> np.ndarray:
    return Q + A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P)


def _unstable_modes_rank_deficient(A: np.ndarray, other: np.ndarray, axis: int) -> bool:
    """PBH test on the closed right half plane: rank [A - sI, B] (or its dual) < n for some eigenvalue s."""
    n = A.shape[0]
    for s in np.linalg.eigvals(A):
        if s.real < -1e-12:
            continue
        shifted = A - s * np.eye(n)
        stacked = np.concatenate([shifted, other], axis=axis)
        if np.linalg.matrix_rank(stacked, tol=1e-9 * max(1.0, np.abs(stacked).max())) < n:
            return True
    return False


def solve_riccati(A, B, Q, R, tol: Optional[float] = None) -> LqrSolution:
    """Stabilizing solution of the Riccati equation: Schur method plus Newton-Kleinman refinement.

    Raises:
        NumericalError: the closed loop `A - BK` is not Hurwitz.
        ConvergenceError: the residual does not reach `1e-8 (1 + |Q|_inf)`.
    """
    A, B, Q, R = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, Q, R))
    n, m = B.shape
    if A.shape != (n, n) or Q.shape != (n, n) or R.shape != (m, m):
        raise DimensionError(f"inconsistent shapes A{A.shape}, B{B.shape}, Q{Q.shape}, R{R.shape}")
    Q = 0.5 * (Q + Q.T)
    R = 0.5 * (R + R.T)
    tol = 1e-8 * (1.0 + np.abs(Q).sum(axis=1).max()) if tol is None else tol

    if _unstable_modes_rank_deficient(A, B, axis=1):
        logger.warning("(A, B) is not stabilizable in the closed right half plane; the Riccati solve may fail")
    if _unstable_modes_rank_deficient(A, Q, axis=0):
        logger.warning("(A, Q) has undetectable marginal or unstable modes")

    try:
        P = linalg.solve_continuous_are(A, B, Q, R)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Riccati solve failed: {e}") from e

    P = 0.5 * (P + P.T)
    history = [float(np.abs(riccati_residual(A, B, Q, R, P)).max())]
    while history[-1] > tol and len(history) <= MAX_REFINEMENTS:
        K = np.linalg.solve(R, B.T @ P)
        closed = A - B @ K
        P = linalg.solve_continuous_lyapunov(closed.T, -(Q + K.T @ R @ K))
        P = 0.5 * (P + P.T)
        history.append(float(np.abs(riccati_residual(A, B, Q, R, P)).max()))
        logger.debug(f"Newton-Kleinman step {len(history) - 1}: residual {history[-1]:.3e}")

    K = np.linalg.solve(R, B.T @ P)
    abscissa = float(np.max(np.linalg.eigvals(A - B @ K).real))
    if not abscissa < 0.0:
        raise NumericalError(f"closed loop A - BK is not Hurwitz (spectral abscissa {abscissa:.3e})")
    if history[-1] > tol:
        raise ConvergenceError("Riccati residual above tolerance", residual=history[-1], history=history)
    logger.info(f"LQR: residual {history[-1]:.2e}, closed-loop abscissa {abscissa:.4f}")
    return LqrSolution(P=P, K=K, riccati_residual=history[-1], closed_loop_abscissa=abscissa, residual_history=history)


class LqrPolicy:
    """`u_f - K(z - z_f)` on the reduced coordinates `z = x[dims]`, optionally clipped to `bounds`."""

    def __init__(
        self,
        solution: LqrSolution,
        equilibrium: EquilibriumPair,
        dims: Optional[np.ndarray] = None,
        bounds: Optional[ControlBounds] = None,
    ):
        self.P = solution.P
        self.K = solution.K
        self.dims = np.arange(len(equilibrium.x_f)) if dims is None else np.asarray(dims)
        self.z_f = np.asarray(equilibrium.x_f, dtype=float)[self.dims]
        self.u_f = np.asarray(equilibrium.u_f, dtype=float)
        self.bounds = bounds
        if self.K.shape != (len(self.u_f), len(self.dims)):
            raise DimensionError(f"gain has shape {self.K.shape}, expected ({len(self.u_f)}, {len(self.dims)})")

    def _offset(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)[..., self.dims] - self.z_f

    def unclipped(self, x: np.ndarray) -> np.ndarray:
        return self.u_f - self._offset(x) @ self.K.T

    def __call__(self, x: np.ndarray) -> np.ndarray:
        u = self.unclipped(x)
        return u if self.bounds is None else self.bounds.clip(u)

    def reduced_jacobian(self, x: np.ndarray) -> np.ndarray:
        """du/dz, `-K` on channels where clipping is inactive."""
        jac = -np.broadcast_to(self.K, np.shape(x)[:-1] + self.K.shape).copy()
        if self.bounds is not None:
            active = ~self.bounds.interior_mask(self.unclipped(x))
            jac[active, :] = 0.0
        return jac

    def value(self, x: np.ndarray) -> np.ndarray:
        dz = self._offset(x)
        return np.einsum("...i,ij,...j->...", dz, self.P, dz)

    def value_gradient(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * self._offset(x) @ self.P


def lqr_policy(
    solution: LqrSolution,
    equilibrium: EquilibriumPair,
    dims: Optional[np.ndarray] = None,
    bounds: Optional[ControlBounds] = None,
) -> LqrPolicy:
    return LqrPolicy(solution, equilibrium, dims, bounds)


def design_lqr(model: DynamicsModel) -> LqrSolution:
    """Linearizes `model` at its equilibrium in reduced coordinates and solves the Riccati equation there."""
    linearization = model.linearize_reduced()
    cost = model.cost_quadratic()
    logger.info(f"Designing LQR for {model.name} on {model.n_reduced} reduced coordinates")
    return solve_riccati(linearization.A, linearization.B, cost.Q, cost.R)


def model_lqr_policy(model: DynamicsModel, solution: LqrSolution, saturate: bool = True) -> LqrPolicy:
    """The LQR baseline controller of `model`, hard-saturated to its bounds unless `saturate` is False."""
    return LqrPolicy(solution, model.equilibrium, model.reduced_indices, model.bounds if saturate else None)
