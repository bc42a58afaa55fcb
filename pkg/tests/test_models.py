# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

import numpy as np

from qrnet.lqr import design_lqr
from qrnet.models.base import ControlBounds
from qrnet.models.burgers import BurgersConfig
from qrnet.models.chebyshev import chebyshev_diff_matrix, chebyshev_nodes, clenshaw_curtis_weights
from qrnet.models.config import load_model_config, model_config_from_dict, model_config_to_dict
from qrnet.models.linear import LinearConfig, double_integrator_config
from qrnet.models.sampling import BoxDomain, SineSeriesDomain, SphereDomain, sample_initial_conditions
from qrnet.utils import ConfigError, DimensionError

from .testutils import *


@parametrize("N", [2, 5, 8, 16])
def test_chebyshev_matrix_differentiates_polynomials(N):
    D, x = chebyshev_diff_matrix(N)
    assert D.shape == (N + 1, N + 1)
    assert_close(D @ np.ones(N + 1), np.zeros(N + 1), atol=1e-12)
    # exact for degree <= N
    degree = min(N, 4)
    assert_close(D @ x**degree, degree * x ** (degree - 1), atol=1e-9 * N**2)


def test_chebyshev_nodes_are_symmetric():
    x = chebyshev_nodes(7)
    assert x[0] == 1.0 and x[-1] == -1.0
    assert_close(x, -x[::-1], atol=1e-15)


def test_chebyshev_matrix_needs_three_nodes():
    with raises(DimensionError):
        chebyshev_diff_matrix(1)


@parametrize("N", [4, 7, 16])
def test_clenshaw_curtis_integrates_polynomials(N):
    _, x = chebyshev_diff_matrix(N)
    w = clenshaw_curtis_weights(N)
    assert_close(w @ x**2, 2.0 / 3.0, atol=1e-12)
    assert_close(w @ np.ones(N + 1), 2.0, atol=1e-12)


def test_control_bounds_validation():
    with raises(DimensionError):
        ControlBounds(np.array([1.0]), np.array([0.0]))
    with raises(DimensionError):
        ControlBounds(np.array([0.0, 1.0]), np.array([1.0]))
    bounds = ControlBounds(np.array([-1.0, -np.inf]), np.array([1.0, np.inf]))
    assert bounds.bounded.tolist() == [True, False]
    assert bounds.clip(np.array([3.0, 3.0])).tolist() == [1.0, 3.0]
    assert bounds.interior_mask(np.array([1.0, 0.0])).tolist() == [False, True]


def test_equilibrium_control_must_be_interior():
    with raises(DimensionError):
        LinearConfig(u_min=[0.0], u_max=[1.0]).build()


def test_burgers_is_open_loop_unstable_and_stabilizable(burgers):
    A = burgers.linearize().A
    assert np.max(np.linalg.eigvals(A).real) > 0.0
    solution = design_lqr(burgers)
    assert solution.closed_loop_abscissa < 0.0


def test_burgers_goal_is_equilibrium(burgers):
    x_f, u_f = burgers.equilibrium.x_f, burgers.equilibrium.u_f
    assert_close(burgers.dynamics_rhs(x_f, u_f), np.zeros(burgers.n_states))
    assert float(burgers.running_cost(x_f, u_f)) == 0.0


def test_burgers_analytic_jacobian_matches_finite_differences(burgers, rng):
    x = 0.3 * rng.standard_normal(burgers.n_states)
    u = rng.standard_normal(burgers.n_controls)
    analytic = burgers.linearize(x, u)
    numeric = burgers.fd_linearize(x, u)
    scale = np.abs(analytic.A).max()
    assert_close(analytic.A, numeric.A, atol=1e-7 * scale)
    assert_close(analytic.B, numeric.B, atol=1e-8)


def test_burgers_rhs_is_vectorized(burgers, rng):
    x = rng.standard_normal((5, burgers.n_states))
    u = rng.standard_normal((5, burgers.n_controls))
    batched = burgers.dynamics_rhs(x, u)
    for k in range(5):
        assert_close(batched[k], burgers.dynamics_rhs(x[k], u[k]), atol=1e-14)


def test_burgers_rejects_bad_inputs(burgers):
    with raises(DimensionError):
        burgers.dynamics_rhs(np.zeros(burgers.n_states + 1), np.zeros(2))
    x = np.zeros(burgers.n_states)
    x[0] = np.nan
    with raises(DimensionError):
        burgers.dynamics_rhs(x, np.zeros(2))


def test_burgers_config_validation():
    with raises(ConfigError):
        BurgersConfig(n=8, nu=0.0).build()
    with raises(ConfigError):
        BurgersConfig(n=1).build()


def test_cost_gradient_matches_finite_differences(burgers, double_integrator, rng):
    for model in (burgers, double_integrator):
        x = rng.standard_normal(model.n_states)
        numeric = central_difference(lambda z: float(model.state_cost(z)), x)
        assert_close(model.cost_state_gradient(x), numeric, atol=1e-6)


def test_cost_quadratic_matches_hessian(burgers):
    cost = burgers.cost_quadratic()
    x = np.zeros(burgers.n_states)
    x[2] = 1e-3
    assert_close(burgers.state_cost(x), x @ cost.Q @ x, atol=1e-15)


@parametrize("domain", [SphereDomain(radius=1.2), SineSeriesDomain(radius=1.2, modes=6)])
def test_radius_domains_draw_exact_radius(burgers, domain):
    x0 = sample_initial_conditions(domain, 10, 3, burgers)
    assert x0.shape == (10, burgers.n_states)
    assert_close(np.linalg.norm(x0, axis=1), np.full(10, 1.2), atol=1e-12)


def test_sampling_is_reproducible(burgers):
    domain = burgers.default_domain()
    first = sample_initial_conditions(domain, 4, 7, burgers)
    assert np.array_equal(first, sample_initial_conditions(domain, 4, 7, burgers))
    assert not np.array_equal(first, sample_initial_conditions(domain, 4, 8, burgers))
    assert sample_initial_conditions(domain, 0, 7, burgers).shape == (0, burgers.n_states)


def test_box_domain(double_integrator):
    x0 = sample_initial_conditions(BoxDomain(half_widths=[1.0, 0.0]), 50, 0, double_integrator)
    assert np.all(np.abs(x0[:, 0]) <= 1.0)
    assert np.all(x0[:, 1] == 0.0)
    with raises(DimensionError):
        sample_initial_conditions(BoxDomain(half_widths=[1.0]), 2, 0, double_integrator)


def test_sine_domain_needs_collocation_model(double_integrator):
    with raises(ConfigError):
        sample_initial_conditions(SineSeriesDomain(), 2, 0, double_integrator)


def test_model_config_round_trip():
    config = model_config_from_dict({"model": "burgers", "n": 12, "nu": 0.3})
    assert isinstance(config, BurgersConfig)
    assert config.n == 12
    encoded = model_config_to_dict(config)
    assert encoded["model"] == "burgers"
    assert model_config_from_dict(encoded).nu == 0.3


def test_model_config_needs_model_key():
    with raises(ConfigError):
        model_config_from_dict({"n": 12})


def test_load_model_config_with_overrides(tmp_path):
    write_config(tmp_path, "small.yaml", "n: 10\n")
    path = write_config(tmp_path, "burgers.yaml", "model: burgers\nn: 64\nnu: 0.25\noverrides: small.yaml\n")
    config = load_model_config(path)
    assert config.n == 10 and config.nu == 0.25
    config = load_model_config(path, {"n": 6})
    assert config.n == 6


def test_load_model_config_missing_file(tmp_path):
    with raises(ConfigError):
        load_model_config(tmp_path / "absent.yaml")


def test_linear_config_shapes():
    with raises(ConfigError):
        LinearConfig(A=[[0.0, 1.0]], B=[[1.0]]).build()
    model = double_integrator_config().build()
    assert (model.n_states, model.n_controls) == (2, 1)
    assert_close(model.linearize().A, [[0.0, 1.0], [0.0, 0.0]])
