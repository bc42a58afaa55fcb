# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pytest

from qrnet.lqr import design_lqr
from qrnet.models.base import ControlBounds
from qrnet.models.burgers import BurgersConfig, BurgersModel
from qrnet.models.linear import LinearConfig, LinearQuadraticModel
from qrnet.utils import ConfigError

xfail = pytest.mark.xfail
parametrize = pytest.mark.parametrize
slow = pytest.mark.slow


@contextmanager
def raises(exception=ConfigError, match=None):
    with pytest.raises(exception, match=match):
        yield


def assert_close(actual, expected, atol: float = 1e-12, rtol: float = 0.0, msg: str = ""):
    np.testing.assert_allclose(
        np.asarray(actual, dtype=float), np.asarray(expected, dtype=float), atol=atol, rtol=rtol, err_msg=msg
    )


def central_difference(fn: Callable[[np.ndarray], float], theta: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Gradient of a scalar function by central differences, one coordinate at a time."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = step
        grad[j] = (fn(theta + e) - fn(theta - e)) / (2.0 * step)
    return grad


def relative_error(actual, expected) -> float:
    actual, expected = np.asarray(actual, dtype=float), np.asarray(expected, dtype=float)
    return float(np.linalg.norm(actual - expected) / max(np.linalg.norm(expected), 1e-12))


def write_config(directory: Path, name: str, text: str) -> Path:
    path = Path(directory) / name
    path.write_text(text)
    return path


def small_burgers(n: int = 8, bounded: bool = False) -> BurgersModel:
    config = BurgersConfig(n=n, m=2)
    if bounded:
        config.u_min, config.u_max = [-1.0, -1.0], [1.0, 1.0]
    return config.build()


def linear_model(
    A: Sequence[Sequence[float]],
    B: Sequence[Sequence[float]],
    Q: Optional[Sequence[Sequence[float]]] = None,
    R: Optional[Sequence[Sequence[float]]] = None,
    u_min=None,
    u_max=None,
    horizon: float = 2.0,
) -> LinearQuadraticModel:
    n, m = len(A), len(B[0])
    Q = Q if Q is not None else np.eye(n).tolist()
    R = R if R is not None else np.eye(m).tolist()
    config = LinearConfig(
        A=[list(r) for r in A], B=[list(r) for r in B], Q=Q, R=R, u_min=u_min, u_max=u_max, horizon=horizon
    )
    return config.build()


def model_and_solution(model):
    return model, design_lqr(model)


def box(lo: Sequence[float], hi: Sequence[float]) -> ControlBounds:
    return ControlBounds(np.array(lo, dtype=float), np.array(hi, dtype=float))
