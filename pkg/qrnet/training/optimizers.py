# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Optimizers over flat parameter vectors."""
from dataclasses import dataclass, field
from logging import getLogger
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

logger = getLogger(__name__)

Objective = Callable[[np.ndarray], Tuple[float, np.ndarray]]


class Adam:
    """First/second-moment recursion with bias correction.

    >>> opt = Adam(learning_rate=0.1)
    >>> opt.step(np.array([1.0]), np.array([2.0])).round(6).tolist()
    [0.9]
    """

    def __init__(self, learning_rate: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: Optional[np.ndarray] = None
        self.v: Optional[np.ndarray] = None

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad**2
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return theta - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


class NonFiniteLoss(ArithmeticError):
    pass


@dataclass
class LbfgsResult:
    theta: np.ndarray
    history: List[float] = field(default_factory=list)
    status: str = "converged"
    message: str = ""


def minimize_lbfgs(
    objective: Objective, theta0: np.ndarray, max_iterations: int = 5000, ftol: float = 1e-9, memory: int = 10
) -> LbfgsResult:
    """Full-batch L-BFGS-B; `history` holds the loss after every accepted iteration.

    A non-finite loss stops the run with the last parameters whose loss was finite.
    """
    last = {"theta": np.array(theta0, dtype=float), "value": np.inf}
    good = {"theta": np.array(theta0, dtype=float)}
    history: List[float] = []

    def fun(theta):
        value, grad = objective(theta)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise NonFiniteLoss(f"loss {value} is not finite")
        last["theta"], last["value"] = theta.copy(), value
        return value, grad

    def callback(theta):
        value = last["value"] if np.array_equal(theta, last["theta"]) else objective(theta)[0]
        good["theta"] = theta.copy()
        history.append(float(value))

    try:
        result = minimize(
            fun,
            theta0,
            jac=True,
            method="L-BFGS-B",
            callback=callback,
            options={"maxiter": max_iterations, "ftol": ftol, "gtol": 0.0, "maxcor": memory},
        )
    except NonFiniteLoss as e:
        logger.error(f"L-BFGS aborted: {e}")
        return LbfgsResult(good["theta"], history, "aborted", str(e))

    if not history:
        history.append(float(result.fun))
    if result.success:
        status = "converged"
    else:
        status = "max_iterations" if result.nit >= max_iterations else "stopped"
    logger.debug(f"L-BFGS stopped after {result.nit} iterations: {result.message}")
    return LbfgsResult(result.x, history, status, str(result.message))
