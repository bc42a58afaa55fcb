# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Supervision datasets pooled from open-loop solutions.

A dataset directory holds

* `meta.json`: provenance, counts, discarded trajectories and input-scaling statistics;
* `points.csv`: `traj_id, t, x_0.., lam_0.., u_0..` for every kept node (costate cells empty for direct solves);
* `values.csv`: `traj_id, x0_0.., V` for every converged trajectory.

Numbers are written with 17 significant digits so files round-trip exactly.
"""
import csv
import enum
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from logging import getLogger
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from qrnet.lqr import LqrSolution, design_lqr
from qrnet.models.base import DynamicsModel
from qrnet.models.sampling import SamplingDomain, sample_initial_conditions
from qrnet.ocp.direct import DirectSettings, solve_open_loop_direct
from qrnet.ocp.indirect import IndirectSettings, solve_open_loop_indirect
from qrnet.ocp.trajectory import ExtremalTrajectory
from qrnet.policies.architectures import InputScaling
from qrnet.serialization import dump_json, load_json_as
from qrnet.utils import ConfigError, DimensionError, QrnetError, format_float

logger = getLogger(__name__)

DATASET_SCHEMA_VERSION = 1
DEGRADED_FRACTION = 0.9
META_FILE = "meta.json"
POINTS_FILE = "points.csv"
VALUES_FILE = "values.csv"


class SolverMethod(enum.Enum):
    indirect = "indirect"
    direct = "direct"


@dataclass
class DiscardRecord:
    traj_id: int
    reason: str


@dataclass
class DatasetMeta:
    model: Dict[str, Any]
    method: SolverMethod
    seed: int
    n_traj: int
    n_converged: int
    n_points: int
    n_states: int
    n_controls: int
    horizon: float
    has_costate: bool
    degraded: bool
    dims: List[int]
    discarded: List[DiscardRecord] = field(default_factory=list)
    scale_center: List[float] = field(default_factory=list)
    scale_half_range: List[float] = field(default_factory=list)
    schema_version: int = DATASET_SCHEMA_VERSION


@dataclass(eq=False)
class Dataset:
    meta: DatasetMeta
    traj_id: np.ndarray  # (N,)
    t: np.ndarray  # (N,)
    x: np.ndarray  # (N, n)
    u: np.ndarray  # (N, m)
    lam: Optional[np.ndarray]  # (N, n) or None
    value_ids: np.ndarray  # (K,)
    x0: np.ndarray  # (K, n)
    V: np.ndarray  # (K,)

    def __post_init__(self):
        for name in ("t", "x", "u", "x0", "V"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DimensionError(f"dataset column {name} contains non-finite entries")
        if self.lam is not None and not np.all(np.isfinite(self.lam)):
            raise DimensionError("dataset costates contain non-finite entries")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def has_costate(self) -> bool:
        return self.lam is not None

    @property
    def trajectory_ids(self) -> np.ndarray:
        return np.unique(np.concatenate([self.traj_id, self.value_ids]).astype(int))

    def subset(self, ids: Sequence[int]) -> "Dataset":
        """The records of the trajectories `ids`."""
        ids = np.intersect1d(np.asarray(ids, dtype=int), self.trajectory_ids)
        rows = np.isin(self.traj_id, ids)
        values = np.isin(self.value_ids, ids)
        meta = replace(
            self.meta,
            n_traj=len(ids),
            n_converged=len(ids),
            n_points=int(rows.sum()),
            discarded=[],
        )
        subset = Dataset(
            meta,
            self.traj_id[rows],
            self.t[rows],
            self.x[rows],
            self.u[rows],
            None if self.lam is None else self.lam[rows],
            self.value_ids[values],
            self.x0[values],
            self.V[values],
        )
        _set_scaling(subset)
        return subset

    def scaling(self) -> InputScaling:
        if not self.meta.scale_center:
            return InputScaling.from_data(self.x[:, self.meta.dims])
        return InputScaling(np.asarray(self.meta.scale_center), np.asarray(self.meta.scale_half_range))


def _set_scaling(dataset: Dataset) -> None:
    if len(dataset) == 0:
        dataset.meta.scale_center, dataset.meta.scale_half_range = [], []
        return
    scaling = InputScaling.from_data(dataset.x[:, dataset.meta.dims])
    dataset.meta.scale_center = scaling.center.tolist()
    dataset.meta.scale_half_range = scaling.half_range.tolist()


def _solve_task(task) -> Tuple[Optional[ExtremalTrajectory], str]:
    model, x0, method, settings, solution = task
    try:
        if method is SolverMethod.indirect:
            traj = solve_open_loop_indirect(model, x0, settings, solution)
        else:
            traj = solve_open_loop_direct(model, x0, settings, solution)
    except (QrnetError, ValueError, np.linalg.LinAlgError, FloatingPointError) as e:
        return None, f"{type(e).__name__}: {e}"
    if not traj.converged:
        return traj, traj.reason or "not converged"
    return traj, ""


def _settings_for(method: SolverMethod, settings):
    expected = IndirectSettings if method is SolverMethod.indirect else DirectSettings
    if settings is None:
        return expected()
    if not isinstance(settings, expected):
        raise ConfigError(f"{method.name} solves take {expected.__name__}, got {type(settings).__name__}")
    return settings


def generate_dataset(
    model: DynamicsModel,
    n_traj: int,
    method: Union[str, SolverMethod] = SolverMethod.indirect,
    seed: int = 0,
    domain: Optional[SamplingDomain] = None,
    settings: Union[IndirectSettings, DirectSettings, None] = None,
    workers: int = 1,
    solution: Optional[LqrSolution] = None,
) -> Dataset:
    """Solves `n_traj` open-loop problems from seeded initial conditions and pools their nodes.

    Results are assembled in trajectory order, so the files do not depend on `workers`.
    """
    method = SolverMethod[method] if isinstance(method, str) else method
    settings = _settings_for(method, settings)
    domain = domain or model.default_domain()
    if workers < 1:
        raise ConfigError(f"workers must be positive, got {workers}")
    x0s = sample_initial_conditions(domain, n_traj, seed, model)
    solution = solution or design_lqr(model)

    tasks = [(model, x0, method, settings, solution) for x0 in x0s]
    logger.info(f"Solving {n_traj} open-loop problems ({method.name}) with {workers} worker(s)")
    if workers > 1 and n_traj > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_solve_task, tasks))
    else:
        outcomes = [_solve_task(task) for task in tasks]

    n, m = model.n_states, model.n_controls
    has_costate = method is SolverMethod.indirect
    columns: Dict[str, List[np.ndarray]] = {"id": [], "t": [], "x": [], "u": [], "lam": []}
    value_ids, starts, values = [], [], []
    discarded = []
    for traj_id, (traj, reason) in enumerate(outcomes):
        if reason:
            logger.warning(f"Discarding trajectory {traj_id}: {reason}")
            discarded.append(DiscardRecord(traj_id, reason))
            continue
        keep = traj.dataset_nodes()
        columns["id"].append(np.full(len(keep), traj_id))
        columns["t"].append(traj.t[keep])
        columns["x"].append(traj.x[keep])
        columns["u"].append(traj.u[keep])
        if has_costate:
            columns["lam"].append(traj.lam[keep])
        value_ids.append(traj_id)
        starts.append(traj.x[0])
        values.append(traj.cost)

    converged = len(value_ids)
    degraded = n_traj > 0 and converged < DEGRADED_FRACTION * n_traj
    if degraded:
        logger.warning(f"Dataset degraded: only {converged} of {n_traj} trajectories converged")

    def stack(key, width):
        return np.concatenate(columns[key]) if columns[key] else np.zeros((0, width))

    meta = DatasetMeta(
        model=model.describe(),
        method=method,
        seed=int(seed),
        n_traj=int(n_traj),
        n_converged=converged,
        n_points=int(sum(len(ids) for ids in columns["id"])),
        n_states=n,
        n_controls=m,
        horizon=float(getattr(settings, "horizon", None) or model.horizon),
        has_costate=has_costate,
        degraded=degraded,
        dims=[int(d) for d in model.reduced_indices],
        discarded=discarded,
    )
    dataset = Dataset(
        meta,
        np.concatenate(columns["id"]).astype(int) if columns["id"] else np.zeros(0, dtype=int),
        np.concatenate(columns["t"]) if columns["t"] else np.zeros(0),
        stack("x", n),
        stack("u", m),
        stack("lam", n) if has_costate else None,
        np.asarray(value_ids, dtype=int),
        np.asarray(starts, dtype=float).reshape(-1, n),
        np.asarray(values, dtype=float),
    )
    _set_scaling(dataset)
    logger.info(f"Dataset: {converged}/{n_traj} trajectories, {len(dataset)} points")
    return dataset


def save_dataset(dataset: Dataset, directory: Union[str, os.PathLike]) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n, m = dataset.meta.n_states, dataset.meta.n_controls
    dump_json(dataset.meta, directory / META_FILE)

    with open(directory / POINTS_FILE, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        header = ["traj_id", "t"] + [f"x_{i}" for i in range(n)] + [f"lam_{i}" for i in range(n)]
        writer.writerow(header + [f"u_{j}" for j in range(m)])
        for k in range(len(dataset)):
            lam = [""] * n if dataset.lam is None else [format_float(v) for v in dataset.lam[k]]
            writer.writerow(
                [int(dataset.traj_id[k]), format_float(dataset.t[k])]
                + [format_float(v) for v in dataset.x[k]]
                + lam
                + [format_float(v) for v in dataset.u[k]]
            )

    with open(directory / VALUES_FILE, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["traj_id"] + [f"x0_{i}" for i in range(n)] + ["V"])
        for k in range(len(dataset.value_ids)):
            writer.writerow(
                [int(dataset.value_ids[k])] + [format_float(v) for v in dataset.x0[k]] + [format_float(dataset.V[k])]
            )
    logger.info(f"Wrote dataset with {len(dataset)} points to {directory}")
    return directory


def _read_rows(path: Path, width: int) -> List[List[str]]:
    if not path.exists():
        raise ConfigError(f"{path} does not exist")
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        next(reader, None)
        rows = [row for row in reader if row]
    for row in rows:
        if len(row) != width:
            raise ConfigError(f"{path}: expected {width} columns, got {len(row)}")
    return rows


def load_dataset(directory: Union[str, os.PathLike]) -> Dataset:
    directory = Path(directory)
    meta = load_json_as(DatasetMeta, directory / META_FILE)
    if meta.schema_version != DATASET_SCHEMA_VERSION:
        raise ConfigError(f"{directory}: dataset schema {meta.schema_version}, expected {DATASET_SCHEMA_VERSION}")
    n, m = meta.n_states, meta.n_controls

    points = _read_rows(directory / POINTS_FILE, 2 + 2 * n + m)
    traj_id = np.array([int(row[0]) for row in points], dtype=int)
    numeric = np.array([[float(v) for v in row[1 : 2 + n]] + [float(v) for v in row[2 + 2 * n :]] for row in points])
    numeric = numeric.reshape(len(points), 1 + n + m)
    lam = None
    if meta.has_costate:
        lam = np.array([[float(v) for v in row[2 + n : 2 + 2 * n]] for row in points]).reshape(len(points), n)

    values = _read_rows(directory / VALUES_FILE, n + 2)
    value_ids = np.array([int(row[0]) for row in values], dtype=int)
    tail = np.array([[float(v) for v in row[1:]] for row in values]).reshape(len(values), n + 1)
    x, u = numeric[:, 1 : 1 + n], numeric[:, 1 + n :]
    return Dataset(meta, traj_id, numeric[:, 0], x, u, lam, value_ids, tail[:, :n], tail[:, n])


def split_dataset(dataset: Dataset, test_fraction: float, seed: int = 0) -> Tuple[Dataset, Dataset]:
    """Splits by trajectory, so no trajectory contributes to both halves."""
    if not 0.0 <= test_fraction < 1.0:
        raise ConfigError(f"test fraction must lie in [0, 1), got {test_fraction}")
    ids = dataset.trajectory_ids
    order = np.random.default_rng(seed).permutation(ids)
    n_test = int(round(test_fraction * len(ids)))
    if test_fraction > 0.0 and len(ids) >= 2:
        n_test = min(max(n_test, 1), len(ids) - 1)
    test_ids, train_ids = np.sort(order[:n_test]), np.sort(order[n_test:])
    return dataset.subset(train_ids), dataset.subset(test_ids)


def merge_datasets(datasets: Sequence[Dataset]) -> Dataset:
    """Concatenates datasets of the same model and method, renumbering trajectories."""
    if not datasets:
        raise ConfigError("nothing to merge")
    first = datasets[0].meta
    for other in datasets[1:]:
        meta = other.meta
        if (meta.n_states, meta.n_controls, meta.dims, meta.method) != (
            first.n_states,
            first.n_controls,
            first.dims,
            first.method,
        ):
            raise ConfigError("datasets of different models or methods cannot be merged")

    offset = 0
    ids, value_ids, discarded = [], [], []
    for dataset in datasets:
        ids.append(dataset.traj_id + offset)
        value_ids.append(dataset.value_ids + offset)
        discarded.extend(DiscardRecord(r.traj_id + offset, r.reason) for r in dataset.meta.discarded)
        offset += dataset.meta.n_traj
    has_costate = all(d.has_costate for d in datasets)
    n_traj = sum(d.meta.n_traj for d in datasets)
    n_converged = sum(d.meta.n_converged for d in datasets)
    meta = replace(
        first,
        seed=first.seed,
        n_traj=n_traj,
        n_converged=n_converged,
        n_points=sum(len(d) for d in datasets),
        has_costate=has_costate,
        degraded=n_traj > 0 and n_converged < DEGRADED_FRACTION * n_traj,
        discarded=discarded,
    )
    merged = Dataset(
        meta,
        np.concatenate(ids),
        np.concatenate([d.t for d in datasets]),
        np.concatenate([d.x for d in datasets]),
        np.concatenate([d.u for d in datasets]),
        np.concatenate([d.lam for d in datasets]) if has_costate else None,
        np.concatenate(value_ids),
        np.concatenate([d.x0 for d in datasets]),
        np.concatenate([d.V for d in datasets]),
    )
    _set_scaling(merged)
    return merged


def dataset_from_records(
    model: DynamicsModel, x: np.ndarray, u: np.ndarray, lam: Optional[np.ndarray] = None
) -> Dataset:
    """A dataset of single-point trajectories from raw `(x, u, lam)` records, with no value data."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    count, n = x.shape
    if n != model.n_states or u.shape != (count, model.n_controls):
        raise DimensionError(f"records have shapes {x.shape} and {u.shape} for model {model.name}")
    if lam is not None:
        lam = np.atleast_2d(np.asarray(lam, dtype=float))
        if lam.shape != x.shape:
            raise DimensionError(f"costates must have the states' shape {x.shape}, got {lam.shape}")
    meta = DatasetMeta(
        model=model.describe(),
        method=SolverMethod.indirect if lam is not None else SolverMethod.direct,
        seed=0,
        n_traj=count,
        n_converged=count,
        n_points=count,
        n_states=n,
        n_controls=model.n_controls,
        horizon=float(model.horizon),
        has_costate=lam is not None,
        degraded=False,
        dims=[int(d) for d in model.reduced_indices],
    )
    empty = np.zeros(0, dtype=int)
    dataset = Dataset(meta, np.arange(count), np.zeros(count), x, u, lam, empty, np.zeros((0, n)), np.zeros(0))
    _set_scaling(dataset)
    return dataset
