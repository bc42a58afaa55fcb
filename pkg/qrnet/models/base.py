# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""The controlled-system abstraction shared by every testbed.

A model is a control-affine vector field `x' = f(x, u)` with running cost `L(x, u) = q(x) + r(u)`, an
equilibrium pair `(x_f, u_f)` and box bounds on the control. Every array operation accepts either a single
vector or a batch with a leading axis.

Models also expose *reduced coordinates*: the subset of state coordinates that LQR design, the learned policies
and the stability analysis work in. For most models this is the full state.
"""
import abc
from dataclasses import dataclass
from logging import getLogger
from typing import Optional

import numpy as np

from qrnet.utils import DimensionError, NumericalError, as_batch, batched_fd_jacobian, check_finite, fd_jacobian

logger = getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ControlBounds:
    """Per-channel box `u_min <= u <= u_max`. Infinite entries mean the side is unbounded."""

    u_min: np.ndarray
    u_max: np.ndarray

    def __post_init__(self):
        u_min = np.asarray(self.u_min, dtype=float).reshape(-1)
        u_max = np.asarray(self.u_max, dtype=float).reshape(-1)
        if u_min.shape != u_max.shape:
            raise DimensionError(f"u_min and u_max differ in shape: {u_min.shape} vs {u_max.shape}")
        if np.any(np.isnan(u_min)) or np.any(np.isnan(u_max)):
            raise DimensionError("control bounds must not be NaN")
        if np.any(u_min >= u_max):
            raise DimensionError(f"every channel needs u_min < u_max, got {u_min} and {u_max}")
        object.__setattr__(self, "u_min", u_min)
        object.__setattr__(self, "u_max", u_max)

    @classmethod
    def unbounded(cls, m: int) -> "ControlBounds":
        return cls(np.full(m, -np.inf), np.full(m, np.inf))

    @property
    def m(self) -> int:
        return self.u_min.shape[0]

    @property
    def bounded(self) -> np.ndarray:
        """Channels with both sides finite."""
        return np.isfinite(self.u_min) & np.isfinite(self.u_max)

    def clip(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.u_min, self.u_max)

    def interior_mask(self, u: np.ndarray) -> np.ndarray:
        """True where `u` lies strictly inside its interval (clipping inactive)."""
        return (u > self.u_min) & (u < self.u_max)

    def contains(self, u: np.ndarray) -> bool:
        return bool(np.all(u >= self.u_min) and np.all(u <= self.u_max))

    def check_interior(self, u_f: np.ndarray) -> None:
        if not np.all(self.interior_mask(np.asarray(u_f, dtype=float))):
            raise DimensionError(f"equilibrium control {u_f} is not strictly inside [{self.u_min}, {self.u_max}]")


@dataclass(frozen=True, eq=False)
class EquilibriumPair:
    x_f: np.ndarray
    u_f: np.ndarray


@dataclass(frozen=True, eq=False)
class SystemLinearization:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        check_finite("A", self.A)
        check_finite("B", self.B)


@dataclass(frozen=True, eq=False)
class CostQuadratic:
    """Weight matrices of the local expansion `q(x) ~ dx'Q dx`, `r(u) ~ du'R du`."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        Q = check_finite("Q", self.Q)
        R = check_finite("R", self.R)
        if not np.allclose(Q, Q.T, atol=1e-12 * max(1.0, np.abs(Q).max(initial=0.0))):
            raise NumericalError("Q must be symmetric")
        if not np.allclose(R, R.T, atol=1e-12 * max(1.0, np.abs(R).max(initial=0.0))):
            raise NumericalError("R must be symmetric")
        if np.linalg.eigvalsh(Q).min(initial=0.0) < -1e-10 * max(1.0, np.abs(Q).max(initial=0.0)):
            raise NumericalError("Q must be positive semidefinite")
        try:
            np.linalg.cholesky(R)
        except np.linalg.LinAlgError as e:
            raise NumericalError("R must be positive definite") from e


class DynamicsModel(abc.ABC):
    """A control-affine system with quadratic control cost.

    Subclasses implement `rhs`, `state_cost`, `cost_state_gradient`, `control_matrix` and `cost_quadratic`.
    Analytic state Jacobians are optional; the default falls back to central differences.
    """

    name: str = "model"

    def __init__(self, equilibrium: EquilibriumPair, bounds: ControlBounds, control_weight: np.ndarray):
        self.equilibrium = equilibrium
        self.bounds = bounds
        self.control_weight = np.asarray(control_weight, dtype=float)
        self.control_weight_inv = np.linalg.inv(self.control_weight)
        if bounds.m != self.n_controls:
            raise DimensionError(f"bounds have {bounds.m} channels, model has {self.n_controls} controls")
        bounds.check_interior(equilibrium.u_f)

    # dimensions

    @property
    @abc.abstractmethod
    def n_states(self) -> int: ...

    @property
    @abc.abstractmethod
    def n_controls(self) -> int: ...

    @property
    def reduced_indices(self) -> np.ndarray:
        return np.arange(self.n_states)

    @property
    def n_reduced(self) -> int:
        return len(self.reduced_indices)

    @property
    def residual_mask(self) -> np.ndarray:
        """State-rate components that must vanish at an equilibrium."""
        return np.ones(self.n_states, dtype=bool)

    # dynamics and cost

    @abc.abstractmethod
    def rhs(self, x: np.ndarray, u: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def control_matrix(self, x: np.ndarray) -> np.ndarray:
        """B(x) = df/du, shape (..., n, m)."""

    @abc.abstractmethod
    def state_cost(self, x: np.ndarray) -> np.ndarray:
        """q(x) >= 0 with q(x_f) = 0."""

    @abc.abstractmethod
    def cost_state_gradient(self, x: np.ndarray) -> np.ndarray:
        """dq/dx, shape (..., n)."""

    @abc.abstractmethod
    def cost_quadratic(self) -> CostQuadratic:
        """Q and R in reduced coordinates."""

    def control_cost(self, u: np.ndarray) -> np.ndarray:
        du = u - self.equilibrium.u_f
        return np.einsum("...i,ij,...j->...", du, self.control_weight, du)

    def control_cost_gradient(self, u: np.ndarray) -> np.ndarray:
        return 2.0 * (u - self.equilibrium.u_f) @ self.control_weight

    def running_cost(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        x = check_finite("x", as_batch(x, self.n_states))
        u = check_finite("u", as_batch(u, self.n_controls, "u"))
        return self.state_cost(x) + self.control_cost(u)

    def dynamics_rhs(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Validated entry point to `rhs`."""
        x = check_finite("x", as_batch(x, self.n_states))
        u = check_finite("u", as_batch(u, self.n_controls, "u"))
        return self.rhs(x, u)

    def state_jacobian(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """df/dx at every point of a batch, shape (..., n, n)."""
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        single = x.ndim == 1
        xb, ub = np.atleast_2d(x), np.atleast_2d(u)
        if ub.shape[0] == 1 and xb.shape[0] > 1:
            ub = np.broadcast_to(ub, (xb.shape[0], ub.shape[1]))
        u_rep = np.repeat(ub, self.n_states, axis=0)
        u_rep = np.concatenate([u_rep, u_rep], axis=0)
        jac = batched_fd_jacobian(lambda z: self.rhs(z, u_rep), xb)
        return jac[0] if single else jac

    def linearize(self, x: Optional[np.ndarray] = None, u: Optional[np.ndarray] = None) -> SystemLinearization:
        x = self.equilibrium.x_f if x is None else np.asarray(x, dtype=float)
        u = self.equilibrium.u_f if u is None else np.asarray(u, dtype=float)
        A = self.state_jacobian(x, u)
        B = self.control_matrix(x)
        return SystemLinearization(A, B)

    def fd_linearize(self, x: np.ndarray, u: np.ndarray, rel_step: float = 1e-6) -> SystemLinearization:
        n = self.n_states
        joint = np.concatenate([x, u])
        jac = fd_jacobian(lambda z: self.rhs(z[:, :n], z[:, n:]), joint, rel_step)
        return SystemLinearization(jac[:, :n], jac[:, n:])

    # reduced coordinates

    def to_reduced(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)[..., self.reduced_indices]

    def from_reduced(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float)

    def embedding_jacobian(self, x: np.ndarray) -> np.ndarray:
        """d from_reduced / dz at the reduced image of `x`, shape (n, n_reduced)."""
        return np.eye(self.n_states)[:, self.reduced_indices]

    def linearize_reduced(self, x: Optional[np.ndarray] = None, u: Optional[np.ndarray] = None) -> SystemLinearization:
        """(A, B) of the dynamics of the reduced coordinates, `z' = A dz + B du`."""
        x = self.equilibrium.x_f if x is None else np.asarray(x, dtype=float)
        full = self.linearize(x, u)
        dims = self.reduced_indices
        return SystemLinearization(full.A[dims] @ self.embedding_jacobian(x), full.B[dims])

    def reduced_rhs(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.rhs(x, u)[..., self.reduced_indices]

    def project(self, x: np.ndarray) -> np.ndarray:
        """Maps a state onto the model's state manifold (identity unless the model has constraints)."""
        return x

    def constraint_drift(self, x: np.ndarray) -> np.ndarray:
        """How far `x` is off the state manifold before `project`."""
        return np.zeros(np.shape(x)[:-1])

    def state_error(self, x: np.ndarray) -> np.ndarray:
        """Distance to the goal in reduced coordinates."""
        dz = self.to_reduced(x) - self.to_reduced(self.equilibrium.x_f)
        return np.linalg.norm(dz, axis=-1)

    def envelope_violated(self, x: np.ndarray) -> bool:
        return False

    def equilibrium_residual(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.rhs(x, u)[..., self.residual_mask]

    # defaults consumed by the solvers and simulators

    @property
    def horizon(self) -> float:
        """Initial horizon for open-loop solves."""
        return 2.0

    @property
    def t_max(self) -> float:
        return 30.0

    @abc.abstractmethod
    def default_domain(self):
        """The SamplingDomain initial conditions are drawn from."""

    def describe(self) -> dict:
        return {"model": self.name, "n_states": self.n_states, "n_controls": self.n_controls}

