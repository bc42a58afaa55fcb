# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Unstable Burgers-type PDE on [-1, 1], collocated on Chebyshev nodes.

    X_t = -X X_xi + nu X_xixi + alpha(xi) X exp(-beta X) + sum_j b_j(xi) u_j,    X(t, +-1) = 0

The advection term is written in conservative form, `-1/2 (X^2)_xi`. The state holds the values at the interior
nodes; `n` counts them, so the underlying grid has `n + 2` points.
"""
from dataclasses import dataclass
from logging import getLogger
from typing import List, Optional

import numpy as np

from qrnet.models.base import ControlBounds, CostQuadratic, DynamicsModel, EquilibriumPair
from qrnet.models.chebyshev import chebyshev_diff_matrix, clenshaw_curtis_weights, interior
from qrnet.models.config import ModelConfig
from qrnet.models.sampling import SineSeriesDomain
from qrnet.utils import ConfigError, DimensionError

logger = getLogger(__name__)


@ModelConfig.register_subclass("burgers")
@dataclass
class BurgersConfig(ModelConfig):
    n: int = 64  # interior collocation nodes
    m: int = 2  # actuators
    nu: float = 0.2
    beta: float = 1.0
    # reaction gain at the interior nodes; defaults to alpha_peak * exp(-alpha_decay * xi^2)
    alpha: Optional[List[float]] = None
    alpha_peak: float = 2.0
    alpha_decay: float = 9.0
    # actuators are Gaussian bumps exp(-(xi - c)^2 / width^2) unless B_cols gives the profiles explicitly
    actuator_centers: Optional[List[float]] = None
    actuator_width: float = 0.2
    B_cols: Optional[List[List[float]]] = None
    # state weights default to the Clenshaw-Curtis weights of the interior nodes
    Q_diag: Optional[List[float]] = None
    R_diag: Optional[List[float]] = None
    # None entries leave that side of the channel unbounded
    u_min: Optional[List[Optional[float]]] = None
    u_max: Optional[List[Optional[float]]] = None
    ic_radius: float = 1.2
    ic_modes: int = 10
    horizon: float = 2.0
    t_max: float = 30.0

    def build(self) -> "BurgersModel":
        return BurgersModel(self)


def bounds_from_lists(
    m: int, u_min: Optional[List[Optional[float]]], u_max: Optional[List[Optional[float]]]
) -> ControlBounds:
    """Box bounds from config lists, where a missing list or a None entry means unbounded."""

    def side(values, fill):
        if values is None:
            return np.full(m, fill)
        if len(values) != m:
            raise ConfigError(f"control bounds need {m} entries, got {len(values)}")
        return np.array([fill if v is None else float(v) for v in values])

    return ControlBounds(side(u_min, -np.inf), side(u_max, np.inf))


class BurgersModel(DynamicsModel):
    name = "burgers"

    def __init__(self, config: BurgersConfig):
        if config.n < 2:
            raise ConfigError(f"need at least two interior nodes, got n={config.n}")
        if config.m < 1:
            raise ConfigError(f"need at least one actuator, got m={config.m}")
        if config.nu <= 0 or config.beta <= 0:
            raise ConfigError(f"nu and beta must be positive, got nu={config.nu}, beta={config.beta}")
        self.config = config
        n, m = config.n, config.m

        D_full, nodes = chebyshev_diff_matrix(n + 1)
        self.xi = nodes[1:-1]
        self.D = interior(D_full)
        self.D2 = interior(D_full @ D_full)
        self.nu = config.nu
        self.beta = config.beta

        if config.alpha is not None:
            self.alpha = _vector("alpha", config.alpha, n)
        else:
            self.alpha = config.alpha_peak * np.exp(-config.alpha_decay * self.xi**2)

        if config.B_cols is not None:
            if len(config.B_cols) != m:
                raise ConfigError(f"B_cols lists {len(config.B_cols)} profiles, m={m}")
            self.B = np.stack([_vector("B_cols", col, n) for col in config.B_cols], axis=1)
        else:
            centers = config.actuator_centers
            if centers is None:
                centers = np.linspace(-0.5, 0.5, m) if m > 1 else [0.0]
            centers = _vector("actuator_centers", centers, m)
            self.B = np.exp(-((self.xi[:, None] - centers[None, :]) ** 2) / config.actuator_width**2)

        if config.Q_diag is not None:
            self.q_weights = _vector("Q_diag", config.Q_diag, n)
        else:
            self.q_weights = clenshaw_curtis_weights(n + 1)[1:-1]
        r_weights = np.full(m, 0.1) if config.R_diag is None else _vector("R_diag", config.R_diag, m)
        if np.any(self.q_weights < 0) or np.any(r_weights <= 0):
            raise ConfigError("Q_diag must be non-negative and R_diag positive")

        self._n, self._m = n, m
        super().__init__(
            EquilibriumPair(np.zeros(n), np.zeros(m)),
            bounds_from_lists(m, config.u_min, config.u_max),
            np.diag(r_weights),
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
        advection = -0.5 * (x * x) @ self.D.T
        diffusion = self.nu * x @ self.D2.T
        reaction = self.alpha * x * np.exp(-self.beta * x)
        return advection + diffusion + reaction + u @ self.B.T

    def state_jacobian(self, x, u):
        x = np.asarray(x, dtype=float)
        reaction = self.alpha * np.exp(-self.beta * x) * (1.0 - self.beta * x)
        jac = self.nu * self.D2 - self.D * x[..., None, :]
        idx = np.arange(self._n)
        jac[..., idx, idx] += reaction
        return jac

    def control_matrix(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.B, x.shape[:-1] + self.B.shape).copy()

    def state_cost(self, x):
        return np.sum(self.q_weights * x * x, axis=-1)

    def cost_state_gradient(self, x):
        return 2.0 * self.q_weights * x

    def cost_quadratic(self) -> CostQuadratic:
        return CostQuadratic(np.diag(self.q_weights), self.control_weight.copy())

    def default_domain(self) -> SineSeriesDomain:
        return SineSeriesDomain(radius=self.config.ic_radius, modes=self.config.ic_modes)

    def describe(self) -> dict:
        return {**super().describe(), "nu": self.nu, "beta": self.beta}


def _vector(name: str, values, size: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape != (size,):
        raise DimensionError(f"{name} needs {size} entries, got {arr.shape[0]}")
    return arr
