# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Seeded Monte Carlo campaigns: worst-case failure, suboptimality and cost comparisons."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from logging import getLogger
from typing import List, Optional, Sequence

import numpy as np

from qrnet.evaluation.simulate import Policy, SimResult, SimSettings, simulate_closed_loop
from qrnet.models.base import DynamicsModel
from qrnet.models.sampling import SamplingDomain, sample_initial_conditions
from qrnet.utils import ConfigError, DimensionError

logger = getLogger(__name__)


@dataclass
class RunRecord:
    index: int
    x0: np.ndarray
    final_error: float
    cost: float
    termination: str
    t_final: float
    max_drift: float = 0.0
    optimal_cost: Optional[float] = None
    suboptimality: Optional[float] = None
    baseline_cost: Optional[float] = None
    excluded: str = ""


@dataclass
class StabilitySummary:
    n_runs: int
    # None when there are no runs
    worst_case_failure: Optional[float]
    n_converged: int
    median_final_error: Optional[float] = None


@dataclass
class OptimalitySummary:
    n_runs: int
    n_included: int
    n_failed: int
    n_excluded: int
    median: Optional[float] = None
    q25: Optional[float] = None
    q75: Optional[float] = None


@dataclass
class ComparisonSummary:
    n_runs: int
    n_better: int
    fraction_better: Optional[float]
    median_cost_ratio: Optional[float] = None


@dataclass
class MonteCarloResult:
    runs: List[RunRecord] = field(default_factory=list)
    stability: Optional[StabilitySummary] = None
    optimality: Optional[OptimalitySummary] = None
    comparison: Optional[ComparisonSummary] = None


def _record(index: int, x0: np.ndarray, sim: SimResult) -> RunRecord:
    return RunRecord(
        index=index,
        x0=np.asarray(x0, dtype=float),
        final_error=sim.final_error,
        cost=sim.total_cost,
        termination=sim.termination.name,
        t_final=float(sim.t[-1]),
        max_drift=sim.max_drift,
    )


def _simulate_task(task) -> SimResult:
    model, policy, x0, settings = task
    return simulate_closed_loop(model, policy, x0, settings)


def simulate_many(
    model: DynamicsModel,
    policy: Policy,
    x0s: np.ndarray,
    settings: Optional[SimSettings] = None,
    workers: int = 1,
) -> List[SimResult]:
    """Closed-loop runs from every row of `x0s`, returned in input order."""
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float)).reshape(-1, model.n_states)
    tasks = [(model, policy, x0, settings) for x0 in x0s]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_simulate_task, tasks))
    return [_simulate_task(task) for task in tasks]


def summarize_stability(runs: Sequence[RunRecord]) -> StabilitySummary:
    if not runs:
        return StabilitySummary(0, None, 0)
    errors = np.array([run.final_error for run in runs])
    converged = sum(run.termination == "steady_state" for run in runs)
    return StabilitySummary(len(runs), float(errors.max()), int(converged), float(np.median(errors)))


def mc_stability(
    model: DynamicsModel,
    policy: Policy,
    domain: Optional[SamplingDomain] = None,
    n: int = 100,
    seed: int = 0,
    settings: Optional[SimSettings] = None,
    workers: int = 1,
) -> MonteCarloResult:
    """`n` seeded runs; the worst-case failure is the largest final distance to the goal.

    Aborted runs contribute their final error like any other.
    """
    if n < 0:
        raise ConfigError(f"number of runs must be non-negative, got {n}")
    domain = domain or model.default_domain()
    x0s = sample_initial_conditions(domain, n, seed, model) if n else np.zeros((0, model.n_states))
    sims = simulate_many(model, policy, x0s, settings, workers)
    runs = [_record(k, x0, sim) for k, (x0, sim) in enumerate(zip(x0s, sims))]
    summary = summarize_stability(runs)
    logger.info(f"MC stability over {n} runs: worst-case failure {summary.worst_case_failure}")
    return MonteCarloResult(runs, stability=summary)


def quartiles(values: Sequence[float]):
    """25th, 50th and 75th percentiles with linear interpolation between order statistics.

    >>> [float(q) for q in quartiles(range(1, 11))]
    [3.25, 5.5, 7.75]
    """
    return np.percentile(np.asarray(values, dtype=float), [25.0, 50.0, 75.0])


def summarize_optimality(runs: Sequence[RunRecord]) -> OptimalitySummary:
    included = [run.suboptimality for run in runs if run.suboptimality is not None]
    failed = sum(run.excluded == "not converged" for run in runs)
    excluded = sum(bool(run.excluded) and run.excluded != "not converged" for run in runs)
    summary = OptimalitySummary(len(runs), len(included), int(failed), int(excluded))
    if included:
        q25, median, q75 = quartiles(included)
        summary.q25, summary.median, summary.q75 = float(q25), float(median), float(q75)
    return summary


def mc_optimality(
    model: DynamicsModel,
    policy: Policy,
    x0s: np.ndarray,
    optimal_costs: np.ndarray,
    settings: Optional[SimSettings] = None,
    workers: int = 1,
    limit: Optional[int] = None,
    seed: int = 0,
) -> MonteCarloResult:
    """Percent cost above optimal, `100 (J - V) / V`, from initial conditions with known optimal costs.

    Runs that do not reach a steady state are counted as failed and left out of the statistics, as are initial
    conditions with `V <= 0`. With `limit`, a seeded subset of the initial conditions is used.
    """
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float)).reshape(-1, model.n_states)
    V = np.asarray(optimal_costs, dtype=float).reshape(-1)
    if len(V) != len(x0s):
        raise DimensionError(f"{len(x0s)} initial conditions but {len(V)} optimal costs")
    indices = np.arange(len(V))
    if limit is not None and limit < len(V):
        indices = np.sort(np.random.default_rng(seed).choice(len(V), size=limit, replace=False))
    sims = simulate_many(model, policy, x0s[indices], settings, workers)

    runs = []
    for k, sim in zip(indices, sims):
        run = _record(int(k), x0s[k], sim)
        run.optimal_cost = float(V[k])
        if V[k] <= 0.0:
            run.excluded = "non-positive optimal cost"
        elif not sim.converged:
            run.excluded = "not converged"
        else:
            run.suboptimality = float(100.0 * (sim.total_cost - V[k]) / V[k])
        runs.append(run)
    summary = summarize_optimality(runs)
    logger.info(f"MC optimality: median suboptimality {summary.median}% over {summary.n_included} runs")
    return MonteCarloResult(runs, optimality=summary)


def mc_compare(
    model: DynamicsModel,
    policy: Policy,
    baseline: Policy,
    x0s: np.ndarray,
    settings: Optional[SimSettings] = None,
    workers: int = 1,
) -> MonteCarloResult:
    """Accumulated cost of `policy` against `baseline` from the same initial conditions.

    A run counts as better when the policy reaches a steady state and either the baseline does not or the policy's
    cost is lower.
    """
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float)).reshape(-1, model.n_states)
    sims = simulate_many(model, policy, x0s, settings, workers)
    baseline_sims = simulate_many(model, baseline, x0s, settings, workers)
    runs, better, ratios = [], 0, []
    for k, (sim, base) in enumerate(zip(sims, baseline_sims)):
        run = _record(k, x0s[k], sim)
        run.baseline_cost = base.total_cost
        if sim.converged and (not base.converged or sim.total_cost < base.total_cost):
            better += 1
        if sim.converged and base.converged and base.total_cost > 0.0:
            ratios.append(sim.total_cost / base.total_cost)
        runs.append(run)
    count = len(runs)
    summary = ComparisonSummary(
        count, better, better / count if count else None, float(np.median(ratios)) if ratios else None
    )
    logger.info(f"Policy cheaper than baseline in {better} of {count} runs")
    return MonteCarloResult(runs, comparison=summary)
