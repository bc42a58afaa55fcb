# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

import numpy as np

from qrnet.models.base import ControlBounds
from qrnet.policies.saturation import (
    hard_saturation,
    saturation_constants,
    smooth_saturation,
    smooth_saturation_with_derivative,
)
from qrnet.utils import DimensionError

from .testutils import *


@parametrize(
    "lo, hi, u_f",
    [(-1.0, 1.0, 0.0), (0.0, 1.0, 0.39), (-0.5, 2.0, 0.1), (-3.0, -1.0, -2.9)],
)
def test_smooth_saturation_fixes_the_goal_control(lo, hi, u_f):
    bounds = box([lo], [hi])
    u = np.array([u_f])
    value, slope = smooth_saturation_with_derivative(u, bounds, u)
    assert_close(value, u, atol=1e-14)
    assert_close(slope, [1.0], atol=1e-12)


def test_symmetric_bounds_give_tanh():
    bounds = box([-2.0], [2.0])
    u = np.linspace(-5.0, 5.0, 21)[:, None]
    assert_close(smooth_saturation(u, bounds, np.zeros(1)), 2.0 * np.tanh(u / 2.0), atol=1e-14)


def test_smooth_saturation_stays_inside_bounds():
    bounds = box([0.0, -1.0], [1.0, 1.0])
    u = np.array([[1e6, -1e6], [-1e6, 1e6]])
    value, slope = smooth_saturation_with_derivative(u, bounds, np.array([0.5, 0.0]))
    assert np.all(value >= bounds.u_min) and np.all(value <= bounds.u_max)
    assert np.all(np.isfinite(value))
    assert_close(slope, np.zeros((2, 2)), atol=0.0)


def test_derivative_matches_finite_differences():
    bounds = box([-0.5], [2.0])
    u_f = np.array([0.1])
    for u0 in (-1.0, 0.1, 0.8, 3.0):
        _, slope = smooth_saturation_with_derivative(np.array([u0]), bounds, u_f)
        numeric = central_difference(lambda v: float(smooth_saturation(v, bounds, u_f)[0]), np.array([u0]))
        assert_close(slope, numeric, atol=1e-8)


def test_unbounded_channels_pass_through():
    bounds = ControlBounds(np.array([-1.0, -np.inf, 0.0]), np.array([1.0, np.inf, np.inf]))
    u = np.array([5.0, 5.0, -5.0])
    value, slope = smooth_saturation_with_derivative(u, bounds, np.array([0.0, 0.0, 1.0]))
    assert value[1:].tolist() == [5.0, -5.0]
    assert slope[1:].tolist() == [1.0, 1.0]
    assert value[0] < 1.0


def test_all_unbounded_is_identity():
    bounds = ControlBounds.unbounded(2)
    u = np.array([[3.0, -4.0]])
    value, slope = smooth_saturation_with_derivative(u, bounds, np.zeros(2))
    assert_close(value, u, atol=0.0)
    assert_close(slope, np.ones_like(u), atol=0.0)


def test_constants_need_interior_goal():
    with raises(DimensionError):
        saturation_constants(box([0.0], [1.0]), np.array([1.0]))


def test_hard_saturation():
    bounds = box([0.0, -1.0], [1.0, 1.0])
    assert hard_saturation(np.array([2.0, -3.0]), bounds).tolist() == [1.0, -1.0]
