# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

import json

import numpy as np

from qrnet.evaluation.stability import closed_loop_jacobian
from qrnet.lqr import design_lqr
from qrnet.policies.architectures import (
    ArchitectureKind,
    InputScaling,
    QRnetPolicy,
    eval_control_model,
    eval_value_gradient_model,
    finalize_checkpoint,
    load_checkpoint,
    network_widths,
    parameter_count,
    parse_kind,
    policy_state_jacobian,
    save_checkpoint,
    table_parameter_count,
)
from qrnet.policies.mlp import (
    init_mlp,
    mlp_forward,
    mlp_input_jacobian,
    mlp_jacobian_param_gradient,
    mlp_param_gradient,
    zeros_like,
)
from qrnet.utils import ConfigError, DimensionError, fd_jacobian

from .testutils import *

ANCHORED = [kind for kind in ArchitectureKind if kind.anchored]
GUARANTEED = [kind for kind in ArchitectureKind if kind.guaranteed]


def make_checkpoint(model, kind, hidden=(6, 6), seed=0, solution=None):
    kind = parse_kind(kind)
    solution = solution or design_lqr(model)
    n, m = model.n_reduced, model.n_controls
    params = init_mlp(network_widths(kind, n, m, list(hidden)), np.random.default_rng(seed))
    scaling = InputScaling(np.full(n, 0.1), np.full(n, 2.0))
    return finalize_checkpoint(kind, params, solution, model.equilibrium, model.bounds, scaling, model.reduced_indices)


@parametrize("kind", list(ArchitectureKind))
def test_parameter_count_matches_network(kind):
    n, m, hidden = 5, 2, [7, 7, 7]
    params = init_mlp(network_widths(kind, n, m, hidden), np.random.default_rng(0))
    assert params.size == parameter_count(kind, n, m, hidden)
    out = params.n_out
    # leading-order count drops one w^2 term and every bias
    assert params.size == table_parameter_count(kind, n, m, 7, 3) - 49 + 3 * 7 + out


def test_parse_kind():
    assert parse_kind("u-mat") is ArchitectureKind.u_mat
    assert parse_kind(ArchitectureKind.lambda_jac) is ArchitectureKind.lambda_jac
    with raises(ConfigError):
        parse_kind("v_nn")


def test_kind_properties():
    assert [k.name for k in GUARANTEED] == ["lambda_jac", "u_jac", "lambda_mat", "u_mat"]
    assert not ArchitectureKind.u_nn.anchored
    assert ArchitectureKind.lambda_qrnet.value_gradient and not ArchitectureKind.u_qrnet.value_gradient


def test_input_scaling():
    scaling = InputScaling.from_data(np.array([[0.0, 2.0], [4.0, 2.0]]))
    assert_close(scaling.scale([4.0, 2.0]), [1.0, 0.0], atol=0.0)
    assert_close(scaling.unscale(scaling.scale([1.0, 3.0])), [1.0, 3.0], atol=1e-15)
    with raises(DimensionError):
        InputScaling(np.zeros(2), np.array([1.0, 0.0]))


@parametrize("kind", ANCHORED)
def test_anchored_kinds_hold_the_goal(bounded_burgers, kind):
    checkpoint = make_checkpoint(bounded_burgers, kind, seed=3)
    policy = QRnetPolicy(checkpoint, bounded_burgers)
    assert_close(policy(bounded_burgers.equilibrium.x_f), bounded_burgers.equilibrium.u_f, atol=1e-12)


@parametrize("kind", GUARANTEED)
def test_guaranteed_kinds_recover_the_lqr_gain(burgers, burgers_lqr, kind):
    checkpoint = make_checkpoint(burgers, kind, seed=5, solution=burgers_lqr)
    policy = QRnetPolicy(checkpoint, burgers)
    assert_close(policy.reduced_jacobian(burgers.equilibrium.x_f), -burgers_lqr.K, atol=1e-10)


@parametrize("kind", [ArchitectureKind.u_qrnet, ArchitectureKind.lambda_qrnet])
def test_plain_anchoring_does_not_fix_the_gain(burgers, burgers_lqr, kind):
    checkpoint = make_checkpoint(burgers, kind, seed=5, solution=burgers_lqr)
    jacobian = QRnetPolicy(checkpoint, burgers).reduced_jacobian(burgers.equilibrium.x_f)
    assert np.abs(jacobian + burgers_lqr.K).max() > 1e-6


@parametrize("kind", list(ArchitectureKind))
def test_policy_jacobian_matches_finite_differences(burgers, rng, kind):
    checkpoint = make_checkpoint(burgers, kind, seed=7)
    policy = QRnetPolicy(checkpoint, burgers)
    x = 0.3 * rng.standard_normal(burgers.n_states)
    numeric = fd_jacobian(lambda z: policy(burgers.from_reduced(z)), burgers.to_reduced(x))
    assert_close(policy_state_jacobian(policy, x), numeric, atol=1e-6)


def test_policy_jacobian_of_a_batch(burgers, rng):
    policy = QRnetPolicy(make_checkpoint(burgers, "u_mat"), burgers)
    x = 0.3 * rng.standard_normal((3, burgers.n_states))
    batch = policy.reduced_jacobian(x)
    assert batch.shape == (3, 2, burgers.n_states)
    assert_close(batch[1], policy.reduced_jacobian(x[1]), atol=1e-14)


def test_uav_u_mat_holds_trim(uav, uav_lqr):
    checkpoint = make_checkpoint(uav, "u_mat", seed=1, solution=uav_lqr)
    policy = QRnetPolicy(checkpoint, uav)
    assert_close(policy(uav.equilibrium.x_f), uav.equilibrium.u_f, atol=1e-12)
    assert_close(policy.reduced_jacobian(uav.equilibrium.x_f), -uav_lqr.K, atol=1e-10)


def test_zero_network_reduces_to_lqr(double_integrator):
    solution = design_lqr(double_integrator)
    checkpoint = make_checkpoint(double_integrator, "u_qrnet", solution=solution)
    checkpoint.layers = zeros_like(checkpoint.mlp()).layers
    checkpoint.frozen_N_xf = np.zeros(1)
    x = np.array([0.4, -0.2])
    assert_close(eval_control_model(checkpoint, x), -solution.K @ x, atol=1e-14)


def test_value_gradient_model(double_integrator):
    solution = design_lqr(double_integrator)
    checkpoint = make_checkpoint(double_integrator, "lambda_jac", solution=solution)
    assert_close(eval_value_gradient_model(checkpoint, np.zeros(2)), np.zeros(2), atol=1e-14)
    with raises(ConfigError):
        eval_control_model(checkpoint, np.zeros(2))
    with raises(ConfigError):
        QRnetPolicy(checkpoint)


def test_finalize_rejects_wrong_network(double_integrator):
    solution = design_lqr(double_integrator)
    params = init_mlp([2, 4, 3], np.random.default_rng(0))
    with raises(DimensionError):
        finalize_checkpoint(
            "u_nn", params, solution, double_integrator.equilibrium, double_integrator.bounds, InputScaling.identity(2)
        )


@parametrize("kind", ["lambda_mat", "u_jac"])
def test_checkpoint_round_trip(tmp_path, bounded_burgers, rng, kind):
    checkpoint = make_checkpoint(bounded_burgers, kind, seed=2)
    path = save_checkpoint(checkpoint, tmp_path / "checkpoint.json")
    loaded = load_checkpoint(path)
    assert loaded.kind is checkpoint.kind
    assert loaded.bounds.u_max.tolist() == [1.0, 1.0]
    x = rng.standard_normal((4, bounded_burgers.n_states))
    before = QRnetPolicy(checkpoint, bounded_burgers)(x)
    after = QRnetPolicy(loaded, bounded_burgers)(x)
    assert np.array_equal(before, after)


def test_checkpoint_keeps_unbounded_sides(tmp_path, burgers):
    path = save_checkpoint(make_checkpoint(burgers, "u_nn"), tmp_path / "checkpoint.json")
    raw = json.loads(path.read_text())
    assert raw["bounds"]["u_min"] == [None, None]
    assert np.all(np.isinf(load_checkpoint(path).bounds.u_min))


def test_checkpoint_schema_mismatch(tmp_path, burgers):
    path = save_checkpoint(make_checkpoint(burgers, "u_nn"), tmp_path / "checkpoint.json")
    raw = json.loads(path.read_text())
    raw["schema_version"] = 99
    path.write_text(json.dumps(raw))
    with raises(ConfigError):
        load_checkpoint(path)


def test_mlp_input_jacobian(rng):
    params = init_mlp([3, 5, 4, 2], rng)
    x = rng.standard_normal(3)
    numeric = fd_jacobian(lambda points: mlp_forward(params, points), x)
    assert_close(mlp_input_jacobian(params, x), numeric, atol=1e-8)


def test_mlp_param_gradient(rng):
    params = init_mlp([3, 5, 4, 2], rng)
    x = rng.standard_normal((6, 3))
    seed = rng.standard_normal((6, 2))

    def objective(theta):
        return float(np.sum(seed * mlp_forward(params.with_flat(theta), x)))

    numeric = central_difference(objective, params.flatten())
    assert_close(mlp_param_gradient(params, x, seed), numeric, atol=1e-7)


def test_mlp_jacobian_param_gradient(rng):
    params = init_mlp([3, 5, 4, 2], rng)
    x = rng.standard_normal((6, 3))
    S = rng.standard_normal((6, 2, 3))

    def objective(theta):
        return float(np.sum(S * mlp_input_jacobian(params.with_flat(theta), x)))

    numeric = central_difference(objective, params.flatten())
    assert_close(mlp_jacobian_param_gradient(params, x, S), numeric, atol=1e-7)


def test_mlp_shape_checks(rng):
    params = init_mlp([3, 4, 2], rng)
    with raises(DimensionError):
        mlp_forward(params, np.zeros(4))
    with raises(DimensionError):
        params.with_flat(np.zeros(params.size + 1))
    with raises(DimensionError):
        init_mlp([3], rng)


@parametrize("testbed", ["burgers", "uav"])
def test_guaranteed_kinds_over_random_parameters(request, testbed):
    model = request.getfixturevalue(testbed)
    solution = design_lqr(model)
    lin = model.linearize_reduced()
    x_f, z_f = model.equilibrium.x_f, model.to_reduced(model.equilibrium.x_f)
    target = lin.A - lin.B @ solution.K
    scale = max(1.0, np.abs(solution.K).max())
    for kind in GUARANTEED:
        for seed in range(20):
            policy = QRnetPolicy(make_checkpoint(model, kind, seed=seed, solution=solution), model)
            assert np.abs(policy(x_f) - model.equilibrium.u_f).max() <= 1e-9
            numeric = fd_jacobian(lambda z, p=policy: p(model.from_reduced(z)), z_f)
            assert np.abs(numeric + solution.K).max() <= 1e-5 * scale, (kind, seed)
            assert_close(closed_loop_jacobian(model, policy, x_f), target, atol=1e-6 * max(1.0, np.abs(target).max()))
