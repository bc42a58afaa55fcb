# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Resumable experiment grids: dataset sizes x trials x architectures.

Layout of a run directory:

```
manifest.json                  every artifact with its SHA-256, plus one record per finished cell
datasets/<key>/                training and test datasets, shared by every cell that needs them
cells/<key>/                   checkpoint.json, report.json, eval.json, eval_runs.csv, done.json
cells.csv, summary.csv         written by emit_report from the manifest alone
```

Keys are SHA-256 hashes of the canonical JSON of everything an artifact depends on, so a rerun with the same
configuration finds every finished artifact and computes nothing. Per-cell seeds come from
`SeedSequence([master_seed, size_index, trial_index, arch_index])`; datasets drop the architecture index so all
architectures of a (size, trial) pair share their data.

Datasets are generated first. The cells still missing then run in a pool of `workers` processes, each with a
single Monte Carlo worker, and are recorded in grid order so the manifest does not depend on `workers`.
"""
import csv
import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from logging import getLogger
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

import draccus
import numpy as np

from qrnet.evaluation.monte_carlo import mc_compare, mc_optimality, mc_stability
from qrnet.evaluation.report import EvalReport, save_eval_report
from qrnet.evaluation.simulate import SimSettings
from qrnet.evaluation.stability import linear_stability
from qrnet.lqr import LqrSolution, design_lqr, model_lqr_policy
from qrnet.models.base import DynamicsModel
from qrnet.models.config import ModelConfig, load_model_config, model_config_to_dict
from qrnet.models.sampling import SamplingDomain
from qrnet.ocp.dataset import Dataset, SolverMethod, generate_dataset, load_dataset, save_dataset
from qrnet.ocp.direct import DirectSettings
from qrnet.ocp.indirect import IndirectSettings
from qrnet.policies.architectures import ArchitectureKind, QRnetPolicy, save_checkpoint
from qrnet.serialization import dump_json, load_json_as
from qrnet.training.fit import TrainSpec, fit, save_report
from qrnet.utils import ConfigError, QrnetError, format_float, sha256_file, sha256_of

logger = getLogger(__name__)

MANIFEST_FILE = "manifest.json"
DONE_FILE = "done.json"
CELLS_FILE = "cells.csv"
SUMMARY_FILE = "summary.csv"
# entropy words of the streams that do not belong to a cell
TEST_STREAM = 2**32 - 1
MC_STREAM = 2**32 - 2
BASELINE = "lqr"


@dataclass
class EvalSpec:
    n_mc: int = 20
    # Monte Carlo initial conditions for the stability campaign; the model's default domain when unset
    domain: Optional[SamplingDomain] = None
    linear: bool = True
    optimality: bool = True
    compare_lqr: bool = False
    sim: SimSettings = field(default_factory=SimSettings)


@dataclass
class ExperimentConfig:
    # path of the model config file
    model: str = "configs/burgers.yaml"
    sizes: List[int] = field(default_factory=lambda: [16])
    trials: int = 10
    architectures: List[ArchitectureKind] = field(
        default_factory=lambda: [
            ArchitectureKind.u_nn, ArchitectureKind.u_qrnet, ArchitectureKind.u_jac, ArchitectureKind.u_mat
        ]
    )
    method: SolverMethod = SolverMethod.indirect
    # training initial conditions; the model's default domain when unset
    domain: Optional[SamplingDomain] = None
    indirect: IndirectSettings = field(default_factory=IndirectSettings)
    direct: DirectSettings = field(default_factory=DirectSettings)
    # trajectories in the shared test set (RMl2 and optimal costs for the optimality campaign)
    test_size: int = 20
    train: TrainSpec = field(default_factory=TrainSpec)
    eval: EvalSpec = field(default_factory=EvalSpec)
    baseline: bool = True
    output_dir: str = "runs/experiment"
    master_seed: int = 0
    workers: int = 1
    deterministic: bool = False

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        if not self.sizes or min(self.sizes) < 1:
            raise ConfigError(f"dataset sizes must be positive, got {self.sizes}")
        if self.test_size < 0 or self.eval.n_mc < 0:
            raise ConfigError("test size and Monte Carlo count must be non-negative")
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")
        if not Path(self.model).exists():
            raise ConfigError(f"model config {self.model} does not exist")
        self.train.validate()


@dataclass
class Artifact:
    path: str
    sha256: str


@dataclass
class CellRecord:
    key: str
    size: int
    trial: int
    architecture: str
    data_seed: int
    train_seed: int
    status: str = "ok"
    error: str = ""
    train_time: Optional[float] = None
    final_loss: Optional[float] = None
    rm_l2: Optional[float] = None
    abscissa: Optional[float] = None
    offset: Optional[float] = None
    worst_case_failure: Optional[float] = None
    median_suboptimality: Optional[float] = None
    n_failed_runs: Optional[int] = None
    fraction_better_than_lqr: Optional[float] = None
    artifacts: List[Artifact] = field(default_factory=list)


@dataclass
class Manifest:
    config_sha256: str
    cells: List[CellRecord] = field(default_factory=list)
    artifacts: List[Artifact] = field(default_factory=list)


def derive_seed(*words: int) -> int:
    """A 32-bit seed from `SeedSequence(words)`.

    >>> derive_seed(0, 1, 2) == derive_seed(0, 1, 2) != derive_seed(0, 2, 1)
    True
    """
    return int(np.random.SeedSequence(list(words)).generate_state(1)[0])


class ExperimentRunner:
    def __init__(self, config: ExperimentConfig):
        config.validate()
        self.config = config
        self.out = Path(config.output_dir)
        self.model_config: ModelConfig = load_model_config(config.model)
        self.model: DynamicsModel = self.model_config.build()
        self._solution: Optional[LqrSolution] = None
        self.manifest = Manifest(sha256_of(self._encoded(config)))

    @staticmethod
    def _encoded(obj) -> Any:
        if isinstance(obj, ModelConfig):
            return model_config_to_dict(obj)
        return draccus.encode(obj)

    @property
    def solution(self) -> LqrSolution:
        if self._solution is None:
            self._solution = design_lqr(self.model)
        return self._solution

    # artifacts

    def _relative(self, path: Path) -> str:
        return Path(os.path.relpath(path, self.out)).as_posix()

    def _artifacts(self, directory: Path) -> List[Artifact]:
        return [Artifact(self._relative(p), sha256_file(p)) for p in sorted(directory.iterdir()) if p.is_file()]

    def _write_manifest(self) -> Path:
        artifacts: Dict[str, Artifact] = {}
        for cell in self.manifest.cells:
            for artifact in cell.artifacts:
                artifacts[artifact.path] = artifact
        for artifact in self.manifest.artifacts:
            artifacts.setdefault(artifact.path, artifact)
        self.manifest.artifacts = [artifacts[p] for p in sorted(artifacts)]
        return dump_json(self.manifest, self.out / MANIFEST_FILE)

    # datasets

    def _dataset(self, n_traj: int, seed: int, label: str) -> Tuple[Dataset, str]:
        config = self.config
        settings = config.indirect if config.method is SolverMethod.indirect else config.direct
        dependencies = {
            "model": self._encoded(self.model_config),
            "method": config.method.name,
            "settings": draccus.encode(settings),
            "domain": None if config.domain is None else draccus.encode(config.domain, SamplingDomain),
            "n_traj": n_traj,
            "seed": seed,
        }
        key = sha256_of(dependencies)
        directory = self.out / "datasets" / key
        if (directory / DONE_FILE).exists():
            logger.info(f"Reusing {label} dataset {key[:12]}")
            dataset = load_dataset(directory)
        else:
            dataset = generate_dataset(
                self.model, n_traj, config.method, seed, config.domain, settings, config.workers, self.solution
            )
            save_dataset(dataset, directory)
            dump_json({"key": key, "label": label}, directory / DONE_FILE)
        self.manifest.artifacts.extend(self._artifacts(directory))
        return dataset, key

    # cells

    def _plan_baseline(self, test: Optional[Dataset], test_key: str) -> "_PlannedCell":
        config = self.config
        key = sha256_of({
            "baseline": BASELINE,
            "model": self._encoded(self.model_config),
            "test": test_key,
            "eval": draccus.encode(config.eval),
            "master_seed": config.master_seed,
        })
        directory = self.out / "cells" / key
        done = _load_done(directory)
        if done is not None:
            return _PlannedCell(directory, done=done)
        return _PlannedCell(directory, task=CellTask(CellRecord(key, 0, 0, BASELINE, 0, 0), directory, test=test))

    def _plan_cell(
        self,
        size_index: int,
        trial: int,
        arch_index: int,
        train: Dataset,
        data_key: str,
        test: Optional[Dataset] = None,
        test_key: str = "",
    ) -> "_PlannedCell":
        config = self.config
        size = config.sizes[size_index]
        kind = config.architectures[arch_index]
        data_seed = derive_seed(config.master_seed, size_index, trial)
        train_seed = derive_seed(config.master_seed, size_index, trial, arch_index)
        spec = dataclasses.replace(config.train, kind=kind, seed=train_seed)
        key = sha256_of({
            "data": data_key,
            "test": test_key,
            "train": draccus.encode(spec),
            "eval": draccus.encode(config.eval),
            "master_seed": config.master_seed,
        })
        directory = self.out / "cells" / key
        done = _load_done(directory)
        if done is not None:
            logger.info(f"Cell size={size} trial={trial} {kind.name} already done")
            return _PlannedCell(directory, done=done)
        record = CellRecord(key, size, trial, kind.name, data_seed, train_seed)
        return _PlannedCell(directory, task=CellTask(record, directory, spec, train, test))

    def _compute(self, tasks: List["CellTask"]) -> Iterator[CellRecord]:
        """Finished records in task order; with several workers the cells run in parallel, one process each."""
        workers = self.config.workers
        if workers > 1 and len(tasks) > 1:
            context = CellContext(self.config, self.model, self.solution, workers=1)
            logger.info(f"Running {len(tasks)} cells on {min(workers, len(tasks))} worker(s)")
            with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
                yield from pool.map(compute_cell, [context] * len(tasks), tasks)
        else:
            context = CellContext(self.config, self.model, self.solution, workers=workers)
            for task in tasks:
                yield compute_cell(context, task)

    def _register(self, record: CellRecord, directory: Path) -> None:
        record.artifacts = self._artifacts(directory)
        self.manifest.cells.append(record)
        self._write_manifest()

    def run(self) -> Path:
        config = self.config
        self.out.mkdir(parents=True, exist_ok=True)
        dump_json(config, self.out / "config.json")
        self.manifest.artifacts.append(Artifact("config.json", sha256_file(self.out / "config.json")))
        if not config.architectures:
            logger.info("No architectures configured; writing an empty manifest")
            self._write_manifest()
            return self.out

        test, test_key = None, ""
        if config.test_size:
            test, test_key = self._dataset(config.test_size, derive_seed(config.master_seed, TEST_STREAM), "test")
        plan: List[_PlannedCell] = []
        if config.baseline:
            plan.append(self._plan_baseline(test, test_key))
        for size_index, size in enumerate(config.sizes):
            for trial in range(config.trials):
                train, data_key = self._dataset(size, derive_seed(config.master_seed, size_index, trial), "training")
                for arch_index in range(len(config.architectures)):
                    plan.append(self._plan_cell(size_index, trial, arch_index, train, data_key, test, test_key))

        results = self._compute([entry.task for entry in plan if entry.task is not None])
        for entry in plan:
            self._register(entry.done if entry.task is None else next(results), entry.directory)
        results.close()
        self._write_manifest()
        logger.info(f"Experiment finished: {len(self.manifest.cells)} cells in {self.out}")
        return self.out


@dataclass
class CellTask:
    record: CellRecord
    directory: Path
    # None for the LQR baseline
    spec: Optional[TrainSpec] = None
    train: Optional[Dataset] = None
    test: Optional[Dataset] = None


@dataclass
class _PlannedCell:
    directory: Path
    done: Optional[CellRecord] = None
    task: Optional[CellTask] = None


@dataclass
class CellContext:
    """Everything a cell reads besides its own task; shipped whole to worker processes."""

    config: ExperimentConfig
    model: DynamicsModel
    solution: LqrSolution
    # Monte Carlo workers inside the cell
    workers: int = 1


def _load_done(directory: Path) -> Optional[CellRecord]:
    if not (directory / DONE_FILE).exists():
        return None
    return load_json_as(CellRecord, directory / DONE_FILE)


def _evaluate(context: CellContext, policy, record: CellRecord, test: Optional[Dataset], directory: Path) -> None:
    model, solution, workers = context.model, context.solution, context.workers
    spec = context.config.eval
    report = EvalReport(mode="mc", seed=context.config.master_seed, kind=record.architecture)
    if spec.linear:
        report.linear = linear_stability(model, policy, solution.closed_loop_abscissa)
        record.abscissa = report.linear.abscissa
        record.offset = report.linear.offset
    if spec.n_mc:
        domain = spec.domain or model.default_domain()
        mc_seed = derive_seed(context.config.master_seed, MC_STREAM)
        stability = mc_stability(model, policy, domain, spec.n_mc, mc_seed, spec.sim, workers)
        report.merge(stability)
        record.worst_case_failure = stability.stability.worst_case_failure
        record.n_failed_runs = spec.n_mc - stability.stability.n_converged
        if spec.compare_lqr and record.architecture != BASELINE:
            x0s = np.array([run.x0 for run in stability.runs])
            comparison = mc_compare(model, policy, model_lqr_policy(model, solution), x0s, spec.sim, workers)
            report.comparison = comparison.comparison
            record.fraction_better_than_lqr = comparison.comparison.fraction_better
    if spec.optimality and test is not None and len(test.V):
        optimality = mc_optimality(model, policy, test.x0, test.V, spec.sim, workers, limit=spec.n_mc or None, seed=0)
        report.optimality = optimality.optimality
        record.median_suboptimality = optimality.optimality.median
    save_eval_report(report, directory / "eval.json")


def compute_cell(context: CellContext, task: CellTask) -> CellRecord:
    """Trains and evaluates one cell, writing its files and `done.json`; failures end up in the record."""
    record, directory = task.record, task.directory
    directory.mkdir(parents=True, exist_ok=True)
    model, solution = context.model, context.solution
    try:
        if task.spec is None:
            _evaluate(context, model_lqr_policy(model, solution), record, task.test, directory)
        else:
            logger.info(f"Cell size={record.size} trial={record.trial} {record.architecture}")
            checkpoint, report = fit(task.spec, task.train, model, solution, task.test, context.config.deterministic)
            save_checkpoint(checkpoint, directory / "checkpoint.json")
            save_report(report, directory / "report.json")
            record.train_time, record.final_loss, record.rm_l2 = report.wall_time, report.final_loss, report.rm_l2
            if report.status == "aborted":
                record.status, record.error = "aborted", "non-finite training loss"
            _evaluate(context, QRnetPolicy(checkpoint, model), record, task.test, directory)
    except (QrnetError, ValueError, np.linalg.LinAlgError) as e:
        name = "LQR baseline" if task.spec is None else f"Cell {record.key[:12]}"
        logger.error(f"{name} failed: {e}")
        record.status, record.error = "failed", f"{type(e).__name__}: {e}"
    dump_json(record, directory / DONE_FILE)
    return record


def run_experiment(config: ExperimentConfig) -> Path:
    return ExperimentRunner(config).run()


# report tables

CELL_COLUMNS = [
    "size",
    "trial",
    "architecture",
    "status",
    "train_time",
    "final_loss",
    "rm_l2",
    "abscissa",
    "offset",
    "worst_case_failure",
    "median_suboptimality",
    "n_failed_runs",
    "fraction_better_than_lqr",
    "data_seed",
    "train_seed",
    "key",
]
SUMMARY_METRICS = ["train_time", "rm_l2", "abscissa", "worst_case_failure", "median_suboptimality"]
STATISTICS = ["median", "q25", "q75", "min", "max"]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def summary_statistics(values: List[float]) -> Dict[str, Optional[float]]:
    """Median, quartiles (linear interpolation), min and max; all None for no values.

    >>> summary_statistics([float(v) for v in range(1, 11)])["q25"]
    3.25
    """
    if not values:
        return {name: None for name in STATISTICS}
    arr = np.asarray(values, dtype=float)
    q25, median, q75 = np.percentile(arr, [25.0, 50.0, 75.0])
    return {
        "median": float(median),
        "q25": float(q25),
        "q75": float(q75),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


def emit_report(run_dir: Union[str, os.PathLike]) -> Tuple[Path, Path]:
    """Writes `cells.csv` and `summary.csv` from the manifest of `run_dir`."""
    run_dir = Path(run_dir)
    if not (run_dir / MANIFEST_FILE).exists():
        raise ConfigError(f"{run_dir} holds no {MANIFEST_FILE}")
    manifest = load_json_as(Manifest, run_dir / MANIFEST_FILE)
    if not manifest.cells:
        raise ConfigError(f"{run_dir} has no completed cells")
    cells = sorted(manifest.cells, key=lambda c: (c.architecture != BASELINE, c.size, c.trial, c.architecture))

    cells_path = run_dir / CELLS_FILE
    with open(cells_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CELL_COLUMNS)
        for cell in cells:
            writer.writerow([_cell(getattr(cell, column)) for column in CELL_COLUMNS])

    groups: Dict[Tuple[int, str], List[CellRecord]] = {}
    for cell in cells:
        groups.setdefault((cell.size, cell.architecture), []).append(cell)
    summary_path = run_dir / SUMMARY_FILE
    with open(summary_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        header = ["size", "architecture", "n_cells", "n_ok"]
        writer.writerow(header + [f"{m}_{s}" for m in SUMMARY_METRICS for s in STATISTICS])
        for (size, architecture), members in groups.items():
            ok = [c for c in members if c.status == "ok"]
            row = [str(size), architecture, str(len(members)), str(len(ok))]
            for metric in SUMMARY_METRICS:
                values = [getattr(c, metric) for c in ok if getattr(c, metric) is not None]
                stats = summary_statistics(values)
                row.extend(_cell(stats[s]) for s in STATISTICS)
            writer.writerow(row)
    logger.info(f"Wrote {len(cells)} cells to {cells_path} and {len(groups)} groups to {summary_path}")
    return cells_path, summary_path
