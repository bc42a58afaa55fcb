# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

import csv
import json

import numpy as np
import pytest

from qrnet.evaluation.monte_carlo import mc_compare, mc_optimality, mc_stability
from qrnet.evaluation.report import RUN_COLUMNS, EvalReport, save_eval_report
from qrnet.evaluation.simulate import SimSettings, Termination, simulate_closed_loop
from qrnet.evaluation.stability import (
    closed_loop_jacobian,
    fd_closed_loop_jacobian,
    find_closed_loop_equilibrium,
    linear_stability,
    spectral_abscissa,
)
from qrnet.lqr import design_lqr, model_lqr_policy
from qrnet.utils import ConvergenceError, DimensionError

from .testutils import *


class ShiftedPolicy:
    """`-K x + c` with a constant gain, so the closed loop settles away from the goal."""

    def __init__(self, K, c):
        self.K, self.c = np.atleast_2d(K), np.atleast_1d(c)

    def __call__(self, x):
        return self.c - np.asarray(x) @ self.K.T

    def reduced_jacobian(self, x):
        return -self.K


@pytest.fixture
def di_lqr(double_integrator):
    solution = design_lqr(double_integrator)
    return double_integrator, solution, model_lqr_policy(double_integrator, solution)


def test_lqr_cost_matches_the_value_function(di_lqr):
    model, solution, policy = di_lqr
    x0 = np.array([1.0, -0.5])
    sim = simulate_closed_loop(model, policy, x0)
    assert sim.converged
    assert sim.final_error < 1e-6
    assert_close(sim.total_cost, x0 @ solution.P @ x0, rtol=1e-3)
    assert np.all(np.diff(sim.cost) >= 0.0)
    assert sim.x.shape == (len(sim.t), 2) and sim.u.shape == (len(sim.t), 1)


def test_simulation_from_the_goal(di_lqr):
    model, _, policy = di_lqr
    sim = simulate_closed_loop(model, policy, np.zeros(2))
    assert sim.termination is Termination.steady_state
    assert sim.total_cost == 0.0 and len(sim.t) == 1


def test_uncontrolled_unstable_plant_times_out(scalar_model):
    sim = simulate_closed_loop(scalar_model, lambda x: np.zeros(1), np.array([0.1]), SimSettings(t_max=2.0))
    assert sim.termination is Termination.timeout
    assert sim.t[-1] == 2.0
    assert_close(sim.x[-1], [0.1 * np.exp(2.0)], rtol=1e-4)


def test_simulation_shape_check(di_lqr):
    model, _, policy = di_lqr
    with raises(DimensionError):
        simulate_closed_loop(model, policy, np.zeros(3))


def test_spectral_abscissa_validation():
    assert spectral_abscissa([[0.0, 1.0], [-1.0, 0.0]]) == pytest.approx(0.0, abs=1e-14)
    with raises(DimensionError):
        spectral_abscissa(np.ones((2, 3)))
    with raises(DimensionError):
        spectral_abscissa([[np.nan]])


def test_lqr_stability_matches_design(burgers, burgers_lqr):
    policy = model_lqr_policy(burgers, burgers_lqr)
    result = linear_stability(burgers, policy, burgers_lqr.closed_loop_abscissa)
    assert result.stable and result.equilibrium_found
    assert result.offset < 1e-10
    assert_close(result.abscissa, burgers_lqr.closed_loop_abscissa, atol=1e-10)


def test_closed_loop_jacobian_matches_finite_differences(burgers, burgers_lqr, rng):
    policy = model_lqr_policy(burgers, burgers_lqr)
    x = 0.3 * rng.standard_normal(burgers.n_states)
    analytic = closed_loop_jacobian(burgers, policy, x)
    numeric = fd_closed_loop_jacobian(burgers, policy, x)
    assert_close(analytic, numeric, atol=1e-6 * max(1.0, np.abs(analytic).max()))


def test_equilibrium_away_from_the_goal(double_integrator):
    solution = design_lqr(double_integrator)
    policy = ShiftedPolicy(solution.K, 0.3)
    search = find_closed_loop_equilibrium(double_integrator, policy)
    # x2' = u = 0 and x1' = x2 = 0 give x1 = c / K1 with K1 = 1
    assert_close(search.x, [0.3, 0.0], atol=1e-10)
    assert_close(search.offset, 0.3, atol=1e-10)
    assert search.iterations >= 1


def test_missing_equilibrium_is_reported(double_integrator, logs_warning):
    policy = ShiftedPolicy(np.zeros((1, 2)), 1.0)
    with raises(ConvergenceError):
        find_closed_loop_equilibrium(double_integrator, policy)
    result = linear_stability(double_integrator, policy)
    assert not result.equilibrium_found
    assert result.offset is None
    assert_close(result.equilibrium, double_integrator.equilibrium.x_f, atol=0.0)
    assert result.abscissa == pytest.approx(0.0, abs=1e-14) and not result.stable


def test_mc_stability(di_lqr):
    model, _, policy = di_lqr
    result = mc_stability(model, policy, n=5, seed=4)
    summary = result.stability
    assert summary.n_runs == 5 and summary.n_converged == 5
    assert summary.worst_case_failure < 1e-6
    again = mc_stability(model, policy, n=5, seed=4)
    assert [run.x0.tolist() for run in again.runs] == [run.x0.tolist() for run in result.runs]
    assert mc_stability(model, policy, n=0).stability.worst_case_failure is None
    with raises(ConfigError):
        mc_stability(model, policy, n=-1)


def test_mc_optimality_of_lqr(di_lqr):
    model, solution, policy = di_lqr
    x0s = np.array([[1.0, 0.0], [0.0, 1.0], [-0.5, 0.5], [0.0, 0.0]])
    V = np.einsum("ki,ij,kj->k", x0s, solution.P, x0s)
    result = mc_optimality(model, policy, x0s, V)
    summary = result.optimality
    assert (summary.n_runs, summary.n_included, summary.n_failed, summary.n_excluded) == (4, 3, 0, 1)
    assert abs(summary.median) < 0.1
    assert summary.q25 <= summary.median <= summary.q75
    assert result.runs[3].excluded == "non-positive optimal cost"

    subset = mc_optimality(model, policy, x0s, V, limit=2, seed=1)
    assert len(subset.runs) == 2
    assert [run.index for run in subset.runs] == sorted(run.index for run in subset.runs)
    with raises(DimensionError):
        mc_optimality(model, policy, x0s, V[:2])


def test_mc_compare_against_a_failing_baseline(scalar_model):
    solution = design_lqr(scalar_model)
    policy = model_lqr_policy(scalar_model, solution)
    x0s = np.array([[0.5], [-0.2]])
    settings = SimSettings(t_max=15.0)
    result = mc_compare(scalar_model, policy, lambda x: np.zeros(1), x0s, settings)
    assert result.comparison.n_better == 2 and result.comparison.fraction_better == 1.0
    assert result.comparison.median_cost_ratio is None

    itself = mc_compare(scalar_model, policy, policy, x0s, settings).comparison
    assert itself.n_better == 0
    assert itself.median_cost_ratio == pytest.approx(1.0)


def test_report_files(tmp_path, di_lqr):
    model, solution, policy = di_lqr
    report = EvalReport(mode="stability", seed=4, kind="lqr")
    report.linear = linear_stability(model, policy, solution.closed_loop_abscissa)
    report.merge(mc_stability(model, policy, n=3, seed=4))
    json_path, csv_path = save_eval_report(report, tmp_path / "eval")
    assert json_path == tmp_path / "eval" / "report.json"
    assert csv_path == tmp_path / "eval" / "report_runs.csv"

    raw = json.loads(json_path.read_text())
    assert raw["mode"] == "stability" and raw["stability"]["n_runs"] == 3
    assert raw["optimality"] is None
    with open(csv_path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == RUN_COLUMNS + ["x0_0", "x0_1"]
    assert len(rows) == 4
    assert rows[1][RUN_COLUMNS.index("termination")] == "steady_state"
