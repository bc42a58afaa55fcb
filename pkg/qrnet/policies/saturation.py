# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Hard and smooth control saturation.

The smooth saturation is the generalized logistic

    sigma(u) = u_min + (u_max - u_min) / (1 + c1 exp(-c2 (u - u_f)))

with `c1`, `c2` chosen so that `sigma(u_f) = u_f` and `sigma'(u_f) = 1`. Channels that are not bounded on both sides
pass through unchanged.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from qrnet.models.base import ControlBounds

EXPONENT_CLIP = 50.0


@dataclass(frozen=True, eq=False)
class SmoothSatConstants:
    c1: np.ndarray
    c2: np.ndarray


def saturation_constants(bounds: ControlBounds, u_f: np.ndarray) -> SmoothSatConstants:
    """Constants of the logistic on each bounded channel, NaN elsewhere.

    >>> b = ControlBounds(np.array([-2.0]), np.array([6.0]))
    >>> c = saturation_constants(b, np.array([0.0]))
    >>> float(c.c1[0]), round(float(c.c2[0]), 12)
    (3.0, 0.666666666667)
    """
    u_f = np.asarray(u_f, dtype=float)
    bounds.check_interior(u_f)
    above = bounds.u_max - u_f
    below = u_f - bounds.u_min
    with np.errstate(invalid="ignore", divide="ignore"):
        c1 = np.where(bounds.bounded, above / below, np.nan)
        c2 = np.where(bounds.bounded, (bounds.u_max - bounds.u_min) / (above * below), np.nan)
    return SmoothSatConstants(c1, c2)


def hard_saturation(u: np.ndarray, bounds: ControlBounds) -> np.ndarray:
    return bounds.clip(u)


def smooth_saturation_with_derivative(
    u: np.ndarray, bounds: ControlBounds, u_f: np.ndarray, constants: Optional[SmoothSatConstants] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """`sigma(u)` and the elementwise derivative `sigma'(u)`.

    The exponent is clipped to +-50; where the clip is active the derivative is that of the clipped map, zero.
    """
    u = np.asarray(u, dtype=float)
    constants = constants or saturation_constants(bounds, u_f)
    bounded = bounds.bounded
    if not np.any(bounded):
        return u.copy(), np.ones_like(u)

    lo = np.where(bounded, bounds.u_min, 0.0)
    span = np.where(bounded, bounds.u_max - bounds.u_min, 0.0)
    c1 = np.where(bounded, constants.c1, 1.0)
    c2 = np.where(bounded, constants.c2, 1.0)

    exponent = -c2 * (u - u_f)
    clipped = np.clip(exponent, -EXPONENT_CLIP, EXPONENT_CLIP)
    e = c1 * np.exp(clipped)
    denom = 1.0 + e
    value = lo + span / denom
    slope = np.where(np.abs(exponent) < EXPONENT_CLIP, span * c2 * e / denom**2, 0.0)

    value = np.where(bounded, value, u)
    slope = np.where(bounded, slope, 1.0)
    return value, slope


def smooth_saturation(u: np.ndarray, bounds: ControlBounds, u_f: np.ndarray) -> np.ndarray:
    """
    >>> b = ControlBounds(np.array([-1.0]), np.array([1.0]))
    >>> round(float(smooth_saturation(np.array([0.5]), b, np.array([0.0]))[0]), 8)
    0.46211716
    """
    return smooth_saturation_with_derivative(u, bounds, u_f)[0]
