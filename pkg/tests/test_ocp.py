# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

import numpy as np
import pytest

from qrnet.lqr import design_lqr
from qrnet.models.sampling import BoxDomain
from qrnet.ocp.dataset import (
    SolverMethod,
    dataset_from_records,
    generate_dataset,
    load_dataset,
    merge_datasets,
    save_dataset,
    split_dataset,
)
from qrnet.ocp.direct import DirectSettings, solve_open_loop_direct
from qrnet.ocp.hamiltonian import hamiltonian, minimize_hamiltonian, pmp_rhs
from qrnet.ocp.indirect import IndirectSettings, solve_open_loop_indirect
from qrnet.utils import ConfigError, DimensionError

from .testutils import *

X0 = np.array([0.8, -0.5])


@pytest.fixture(scope="module")
def lq_dataset():
    model = linear_model([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], horizon=4.0)
    return model, generate_dataset(model, 4, SolverMethod.indirect, seed=3, domain=BoxDomain(half_width=0.5))


def test_minimizer_zeroes_the_control_gradient(burgers, rng):
    x = 0.3 * rng.standard_normal(burgers.n_states)
    lam = rng.standard_normal(burgers.n_states)
    u = minimize_hamiltonian(burgers, x, lam)
    numeric = central_difference(lambda v: float(hamiltonian(burgers, x, lam, v)), u)
    assert_close(numeric, np.zeros(burgers.n_controls), atol=1e-6)


def test_minimizer_respects_the_box(bounded_burgers, rng):
    x = 0.3 * rng.standard_normal(bounded_burgers.n_states)
    lam = 20.0 * rng.standard_normal(bounded_burgers.n_states)
    u_star = minimize_hamiltonian(bounded_burgers, x, lam)
    assert bounded_burgers.bounds.contains(u_star)
    best = float(hamiltonian(bounded_burgers, x, lam, u_star))
    for u in rng.uniform(-1.0, 1.0, (50, bounded_burgers.n_controls)):
        assert best <= float(hamiltonian(bounded_burgers, x, lam, u)) + 1e-12


def test_costate_flow_is_the_state_gradient_of_the_hamiltonian(burgers, rng):
    x = 0.3 * rng.standard_normal(burgers.n_states)
    lam = rng.standard_normal(burgers.n_states)
    u = minimize_hamiltonian(burgers, x, lam)
    _, lam_dot = pmp_rhs(burgers, x, lam)
    numeric = central_difference(lambda y: float(hamiltonian(burgers, y, lam, u)), x)
    assert_close(lam_dot, -numeric, atol=1e-5)


def test_hamiltonian_shape_check(burgers):
    with raises(DimensionError):
        hamiltonian(burgers, np.zeros(burgers.n_states), np.zeros(3), np.zeros(2))


def test_indirect_solve_matches_riccati(double_integrator):
    solution = design_lqr(double_integrator)
    settings = IndirectSettings(tol=1e-8, settle_ratio=1e-5, cost_rtol=1e-6)
    traj = solve_open_loop_indirect(double_integrator, X0, settings, solution)
    assert traj.converged, traj.reason
    assert relative_error(traj.cost, X0 @ solution.P @ X0) <= 1e-3
    assert relative_error(traj.lam[0], 2.0 * solution.P @ X0) <= 1e-3
    assert traj.final_error(double_integrator) <= 1e-5 * np.linalg.norm(X0)
    assert traj.diagnostics["horizon"] >= 4.0
    H0 = traj.diagnostics["hamiltonian_initial"]
    assert traj.diagnostics["hamiltonian_drift"] <= 1e-5 * (1.0 + abs(H0))


def test_indirect_default_settings_keep_the_hamiltonian_constant(double_integrator):
    traj = solve_open_loop_indirect(double_integrator, X0)
    assert traj.converged, traj.reason
    H0 = traj.diagnostics["hamiltonian_initial"]
    assert traj.diagnostics["hamiltonian_drift"] <= 1e-5 * (1.0 + abs(H0))


def test_indirect_rejects_hamiltonian_drift(double_integrator):
    # a coarse collocation cannot hold the Hamiltonian constant to this tolerance
    settings = IndirectSettings(tol=1e-3, hamiltonian_rtol=1e-14)
    traj = solve_open_loop_indirect(double_integrator, X0, settings)
    assert not traj.converged
    assert traj.reason.startswith("Hamiltonian drift")
    assert traj.diagnostics["hamiltonian_drift"] > 1e-14


def test_drifting_trajectories_are_discarded(double_integrator, logs_warning):
    settings = IndirectSettings(tol=1e-3, hamiltonian_rtol=1e-14)
    dataset = generate_dataset(double_integrator, 2, SolverMethod.indirect, seed=1, settings=settings)
    assert dataset.meta.n_converged == 0
    assert all(record.reason.startswith("Hamiltonian drift") for record in dataset.meta.discarded)
    with raises(ConfigError):
        IndirectSettings(hamiltonian_rtol=0.0).validate()


def test_direct_solve_matches_riccati(double_integrator):
    solution = design_lqr(double_integrator)
    traj = solve_open_loop_direct(double_integrator, X0, solution=solution)
    assert traj.converged, traj.reason
    assert traj.lam is None
    assert_close(traj.cost, X0 @ solution.P @ X0, rtol=1e-2, atol=0.0)
    assert traj.diagnostics["max_defect"] <= 1e-6
    assert_close(traj.u[0], -solution.K @ X0, atol=5e-2)


def test_solvers_agree_on_a_bounded_problem(bounded_double_integrator):
    x0 = np.array([2.0, 0.0])
    indirect = solve_open_loop_indirect(bounded_double_integrator, x0)
    direct = solve_open_loop_direct(bounded_double_integrator, x0)
    assert indirect.converged and direct.converged
    assert np.all(np.abs(indirect.u) <= 1.0) and np.all(np.abs(direct.u) <= 1.0 + 1e-12)
    assert_close(direct.cost, indirect.cost, rtol=2e-2, atol=0.0)


@parametrize("solver", [solve_open_loop_indirect, solve_open_loop_direct])
def test_start_at_the_goal(double_integrator, solver):
    traj = solver(double_integrator, np.zeros(2))
    assert traj.converged
    assert traj.cost == 0.0
    assert traj.reason == "at goal"


def test_horizon_cap_reports_failure(double_integrator):
    settings = IndirectSettings(horizon=0.2, max_extensions=0)
    traj = solve_open_loop_indirect(double_integrator, X0, settings)
    assert not traj.converged
    assert "horizon cap" in traj.reason


def test_settings_validation(double_integrator):
    with raises(ConfigError):
        solve_open_loop_indirect(double_integrator, X0, IndirectSettings(growth=1.0))
    with raises(ConfigError):
        solve_open_loop_direct(double_integrator, X0, DirectSettings(intervals=1))
    with raises(ConfigError):
        generate_dataset(double_integrator, 1, SolverMethod.direct, settings=IndirectSettings())


def test_generated_dataset(lq_dataset):
    model, dataset = lq_dataset
    meta = dataset.meta
    assert (meta.n_traj, meta.n_converged, meta.method) == (4, 4, SolverMethod.indirect)
    assert not meta.degraded and meta.has_costate
    assert meta.n_points == len(dataset)
    assert dataset.trajectory_ids.tolist() == [0, 1, 2, 3]
    assert np.all(dataset.V > 0.0)
    assert len(meta.scale_center) == 2
    # first node of each trajectory is its initial condition
    for k, traj_id in enumerate(dataset.value_ids):
        rows = np.flatnonzero(dataset.traj_id == traj_id)
        assert_close(dataset.x[rows[0]], dataset.x0[k], atol=0.0)
        assert dataset.t[rows[0]] == 0.0


def test_dataset_is_reproducible(lq_dataset):
    model, dataset = lq_dataset
    again = generate_dataset(model, 4, SolverMethod.indirect, seed=3, domain=BoxDomain(half_width=0.5))
    assert np.array_equal(dataset.x, again.x)
    assert np.array_equal(dataset.V, again.V)


def test_dataset_files_round_trip(tmp_path, lq_dataset):
    _, dataset = lq_dataset
    save_dataset(dataset, tmp_path / "data")
    loaded = load_dataset(tmp_path / "data")
    for name in ("traj_id", "t", "x", "u", "lam", "value_ids", "x0", "V"):
        assert np.array_equal(getattr(loaded, name), getattr(dataset, name)), name
    assert loaded.meta.method is SolverMethod.indirect
    assert loaded.scaling().half_range.tolist() == dataset.scaling().half_range.tolist()


def test_load_dataset_rejects_missing_and_malformed(tmp_path, lq_dataset):
    with raises(ConfigError):
        load_dataset(tmp_path / "absent")
    _, dataset = lq_dataset
    directory = save_dataset(dataset, tmp_path / "data")
    with open(directory / "values.csv", "a") as f:
        f.write("9,1.0\n")
    with raises(ConfigError):
        load_dataset(directory)


def test_split_by_trajectory(lq_dataset):
    _, dataset = lq_dataset
    train, test = split_dataset(dataset, 0.25, seed=1)
    assert len(test.trajectory_ids) == 1 and len(train.trajectory_ids) == 3
    assert not set(train.trajectory_ids) & set(test.trajectory_ids)
    assert len(train) + len(test) == len(dataset)
    with raises(ConfigError):
        split_dataset(dataset, 1.0)


def test_merge_renumbers_trajectories(lq_dataset):
    _, dataset = lq_dataset
    merged = merge_datasets([dataset, dataset])
    assert merged.meta.n_traj == 8
    assert merged.trajectory_ids.tolist() == list(range(8))
    assert len(merged) == 2 * len(dataset)
    with raises(ConfigError):
        merge_datasets([])


def test_degraded_dataset(double_integrator, logs_warning):
    settings = IndirectSettings(horizon=0.2, max_extensions=0)
    dataset = generate_dataset(double_integrator, 2, SolverMethod.indirect, settings=settings)
    assert dataset.meta.degraded
    assert dataset.meta.n_converged == 0 and len(dataset) == 0
    assert [record.traj_id for record in dataset.meta.discarded] == [0, 1]


def test_dataset_from_records(double_integrator):
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    dataset = dataset_from_records(double_integrator, x, np.zeros((2, 1)), lam=2.0 * x)
    assert dataset.has_costate and len(dataset) == 2
    with raises(DimensionError):
        dataset_from_records(double_integrator, x, np.zeros((3, 1)))
