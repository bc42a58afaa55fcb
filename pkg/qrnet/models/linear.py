# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Linear dynamics with quadratic cost, `x' = A x + B u`, `L = x'Qx + u'Ru`, goal at the origin.

These instances have the Riccati solution as exact optimal feedback, which makes them the oracles of the solver and
training tests.
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from qrnet.models.base import CostQuadratic, DynamicsModel, EquilibriumPair
from qrnet.models.burgers import bounds_from_lists
from qrnet.models.config import ModelConfig
from qrnet.models.sampling import BoxDomain
from qrnet.utils import ConfigError


@ModelConfig.register_subclass("linear")
@dataclass
class LinearConfig(ModelConfig):
    A: List[List[float]] = field(default_factory=lambda: [[0.0]])
    B: List[List[float]] = field(default_factory=lambda: [[1.0]])
    Q: List[List[float]] = field(default_factory=lambda: [[1.0]])
    R: List[List[float]] = field(default_factory=lambda: [[1.0]])
    u_min: Optional[List[Optional[float]]] = None
    u_max: Optional[List[Optional[float]]] = None
    x0_half_width: float = 1.0
    horizon: float = 2.0
    t_max: float = 30.0

    def build(self) -> "LinearQuadraticModel":
        return LinearQuadraticModel(self)


def scalar_config(a: float = 0.0) -> LinearConfig:
    """`x' = a x + u` with unit weights."""
    return LinearConfig(A=[[a]])


def double_integrator_config() -> LinearConfig:
    return LinearConfig(
        A=[[0.0, 1.0], [0.0, 0.0]], B=[[0.0], [1.0]], Q=[[1.0, 0.0], [0.0, 1.0]], R=[[1.0]], horizon=4.0
    )


def identity_config(n: int = 2) -> LinearConfig:
    """`x' = u`, `L = |x|^2 + |u|^2`: P = K = I, the base of the approximation-capacity fits."""
    eye = np.eye(n).tolist()
    return LinearConfig(A=np.zeros((n, n)).tolist(), B=eye, Q=eye, R=eye)


class LinearQuadraticModel(DynamicsModel):
    name = "linear"

    def __init__(self, config: LinearConfig):
        self.config = config
        self.A = np.atleast_2d(np.asarray(config.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(config.B, dtype=float))
        n, m = self.B.shape
        if self.A.shape != (n, n):
            raise ConfigError(f"A must be {n}x{n} to match B, got {self.A.shape}")
        self.cost = CostQuadratic(np.asarray(config.Q, dtype=float), np.asarray(config.R, dtype=float))
        if self.cost.Q.shape != (n, n) or self.cost.R.shape != (m, m):
            raise ConfigError(f"Q must be {n}x{n} and R {m}x{m}, got {self.cost.Q.shape} and {self.cost.R.shape}")
        self._n, self._m = n, m
        super().__init__(
            EquilibriumPair(np.zeros(n), np.zeros(m)), bounds_from_lists(m, config.u_min, config.u_max), self.cost.R
        )

    @property
    def n_states(self) -> int:
        return self._n

    @property
    def n_controls(self) -> int:
        return self._m

    @property
    def horizon(self) -> float:
        return self.config.horizon

    @property
    def t_max(self) -> float:
        return self.config.t_max

    def rhs(self, x, u):
        return np.asarray(x, dtype=float) @ self.A.T + np.asarray(u, dtype=float) @ self.B.T

    def state_jacobian(self, x, u):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.A, x.shape[:-1] + self.A.shape).copy()

    def control_matrix(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.B, x.shape[:-1] + self.B.shape).copy()

    def state_cost(self, x):
        return np.einsum("...i,ij,...j->...", x, self.cost.Q, x)

    def cost_state_gradient(self, x):
        return 2.0 * np.asarray(x, dtype=float) @ self.cost.Q

    def cost_quadratic(self) -> CostQuadratic:
        return self.cost

    def default_domain(self) -> BoxDomain:
        return BoxDomain(half_width=self.config.x0_half_width)
