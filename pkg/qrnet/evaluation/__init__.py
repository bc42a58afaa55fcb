# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

from .monte_carlo import (
    ComparisonSummary,
    MonteCarloResult,
    OptimalitySummary,
    RunRecord,
    StabilitySummary,
    mc_compare,
    mc_optimality,
    mc_stability,
    quartiles,
    simulate_many,
)
from .report import EvalReport, save_eval_report, write_runs_csv
from .simulate import SimResult, SimSettings, Termination, simulate_closed_loop
from .stability import (
    EquilibriumSearch,
    LinearStability,
    closed_loop_jacobian,
    fd_closed_loop_jacobian,
    find_closed_loop_equilibrium,
    linear_stability,
    spectral_abscissa,
)


__all__ = [
    "ComparisonSummary",
    "EquilibriumSearch",
    "EvalReport",
    "LinearStability",
    "MonteCarloResult",
    "OptimalitySummary",
    "RunRecord",
    "SimResult",
    "SimSettings",
    "StabilitySummary",
    "Termination",
    "closed_loop_jacobian",
    "fd_closed_loop_jacobian",
    "find_closed_loop_equilibrium",
    "linear_stability",
    "mc_compare",
    "mc_optimality",
    "mc_stability",
    "quartiles",
    "save_eval_report",
    "simulate_closed_loop",
    "simulate_many",
    "spectral_abscissa",
    "write_runs_csv",
]
