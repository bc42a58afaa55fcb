# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

import math

import numpy as np

from qrnet.lqr import design_lqr, model_lqr_policy, riccati_residual, solve_riccati
from qrnet.utils import DimensionError, NumericalError

from .testutils import *


def test_scalar_riccati_closed_form(scalar_model):
    solution = design_lqr(scalar_model)
    assert_close(solution.P, [[1.0 + math.sqrt(2.0)]], atol=1e-12)
    assert_close(solution.K, [[1.0 + math.sqrt(2.0)]], atol=1e-12)
    assert_close(solution.closed_loop_abscissa, -math.sqrt(2.0), atol=1e-12)


def test_double_integrator_closed_form(double_integrator):
    solution = design_lqr(double_integrator)
    s3 = math.sqrt(3.0)
    assert_close(solution.P, [[s3, 1.0], [1.0, s3]], atol=1e-10)
    assert_close(solution.K, [[1.0, s3]], atol=1e-10)
    assert solution.riccati_residual <= 1e-8 * 2.0
    assert solution.residual_history[-1] == solution.riccati_residual


def test_riccati_residual_small_on_burgers(burgers):
    solution = design_lqr(burgers)
    linearization = burgers.linearize_reduced()
    cost = burgers.cost_quadratic()
    residual = riccati_residual(linearization.A, linearization.B, cost.Q, cost.R, solution.P)
    assert np.abs(residual).max() <= 1e-8 * (1.0 + np.abs(cost.Q).sum(axis=1).max())
    assert_close(solution.P, solution.P.T, atol=1e-14)
    assert np.linalg.eigvalsh(solution.P).min() > 0.0


def test_unstabilizable_pair_is_rejected(logs_warning):
    A = np.eye(2)
    B = np.array([[1.0], [0.0]])
    with raises(NumericalError):
        solve_riccati(A, B, np.eye(2), np.eye(1))


def test_inconsistent_shapes():
    with raises(DimensionError):
        solve_riccati(np.eye(2), np.ones((3, 1)), np.eye(2), np.eye(1))


def test_lqr_policy_value_and_gradient(double_integrator):
    solution = design_lqr(double_integrator)
    policy = model_lqr_policy(double_integrator, solution)
    x = np.array([0.3, -0.7])
    assert_close(policy(x), -solution.K @ x, atol=1e-14)
    assert_close(policy.value(x), x @ solution.P @ x, atol=1e-14)
    assert_close(policy.value_gradient(x), 2.0 * solution.P @ x, atol=1e-14)
    assert_close(policy.reduced_jacobian(x), -solution.K, atol=0.0)
    batch = np.stack([x, -x])
    assert policy(batch).shape == (2, 1)


def test_saturated_lqr_policy(bounded_double_integrator):
    solution = design_lqr(bounded_double_integrator)
    policy = model_lqr_policy(bounded_double_integrator, solution)
    far = np.array([10.0, 10.0])
    assert policy(far).tolist() == [-1.0]
    assert_close(policy.reduced_jacobian(far), np.zeros((1, 2)), atol=0.0)
    near = np.array([0.01, 0.0])
    assert_close(policy.reduced_jacobian(near), -solution.K, atol=0.0)
    unclipped = model_lqr_policy(bounded_double_integrator, solution, saturate=False)
    assert unclipped(far)[0] < -1.0


def test_uav_lqr_holds_trim(uav, uav_lqr):
    policy = model_lqr_policy(uav, uav_lqr)
    assert_close(policy(uav.equilibrium.x_f), uav.equilibrium.u_f, atol=0.0)
    assert policy.reduced_jacobian(uav.equilibrium.x_f).shape == (4, 10)
