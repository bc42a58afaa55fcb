# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Utility functions and exceptions used in various parts of the qrnet package."""
import hashlib
import json
from logging import getLogger
from typing import Any, Callable, List, Optional, Sequence

import numpy as np

logger = getLogger(__name__)


class QrnetError(Exception):
    pass


class ConfigError(QrnetError):
    pass


class DimensionError(QrnetError, ValueError):
    pass


class NumericalError(QrnetError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message: str, residual: float = float("nan"), history: Optional[Sequence[float]] = None):
        self.residual = residual
        self.history: List[float] = list(history or [])
        super().__init__(f"{message} (residual {residual:.3e})")


def as_batch(x: np.ndarray, size: int, name: str = "x") -> np.ndarray:
    """Returns `x` as a float array whose last axis has length `size`.

    >>> as_batch([1, 2], 2).shape
    (2,)
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != size:
        raise DimensionError(f"{name} must have trailing dimension {size}, got shape {arr.shape}")
    return arr


def check_finite(name: str, arr: Any) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} contains non-finite entries")
    return arr


def fd_jacobian(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of `fn` at `x`, shape (len(fn(x)), len(x)).

    The step for coordinate j is `rel_step * max(1, |x_j|)`. All 2n perturbed points are evaluated in one
    batched call, so `fn` must accept a leading batch axis.

    >>> fd_jacobian(lambda z: 3.0 * z, np.array([1.0, 2.0])).round(6).tolist()
    [[3.0, 0.0], [0.0, 3.0]]
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    steps = rel_step * np.maximum(1.0, np.abs(x))
    perturb = np.diag(steps)
    points = np.concatenate([x + perturb, x - perturb], axis=0)
    values = np.asarray(fn(points), dtype=float)
    return ((values[:n] - values[n:]) / (2.0 * steps[:, None])).T


def batched_fd_jacobian(
    fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, rel_step: float = 1e-6
) -> np.ndarray:
    """Central finite differences of a batched map at every row of `x` (shape (N, n)) -> (N, out, n)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    count, n = x.shape
    steps = rel_step * np.maximum(1.0, np.abs(x))
    eye = np.eye(n)
    plus = (x[:, None, :] + steps[:, :, None] * eye).reshape(count * n, n)
    minus = (x[:, None, :] - steps[:, :, None] * eye).reshape(count * n, n)
    values = np.asarray(fn(np.concatenate([plus, minus], axis=0)), dtype=float)
    out = values.shape[-1]
    fp = values[: count * n].reshape(count, n, out)
    fm = values[count * n :].reshape(count, n, out)
    return np.swapaxes((fp - fm) / (2.0 * steps[:, :, None]), 1, 2)


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_of(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def format_float(value: float) -> str:
    """17 significant digits, enough for an exact float64 round trip.

    >>> format_float(0.1)
    '0.10000000000000001'
    """
    return "%.17g" % value
