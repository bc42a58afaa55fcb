# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Fitting checkpoints to datasets."""
import enum
import os
import time
from dataclasses import dataclass, field
from logging import getLogger
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from qrnet.lqr import LqrSolution, design_lqr
from qrnet.models.base import DynamicsModel
from qrnet.ocp.dataset import Dataset
from qrnet.policies.architectures import (
    ArchitectureKind,
    InputScaling,
    PolicyCheckpoint,
    finalize_checkpoint,
    model_anchor,
    network_widths,
)
from qrnet.policies.mlp import init_mlp
from qrnet.serialization import dump_json
from qrnet.training.loss import loss_and_gradient, make_batch, make_context, rm_l2
from qrnet.training.optimizers import Adam, minimize_lbfgs
from qrnet.utils import ConfigError

logger = getLogger(__name__)

REPORT_FILE = "report.json"


class Optimizer(enum.Enum):
    adam = "adam"
    lbfgs = "lbfgs"


@dataclass
class TrainSpec:
    kind: ArchitectureKind = ArchitectureKind.u_mat
    # hidden layer widths
    hidden: List[int] = field(default_factory=lambda: [32] * 5)
    optimizer: Optimizer = Optimizer.adam
    learning_rate: float = 1e-3
    batch_size: int = 256
    epochs: int = 1500
    # weight of the costate term, value-gradient kinds with costate data only
    lam_weight: float = 0.0
    seed: int = 0
    max_iterations: int = 5000
    ftol: float = 1e-9

    def validate(self) -> None:
        if self.epochs < 1 or self.batch_size < 1 or self.max_iterations < 1:
            raise ConfigError("epochs, batch size and iteration limit must be positive")
        if not self.hidden or min(self.hidden) < 1:
            raise ConfigError(f"hidden widths must be positive, got {self.hidden}")
        if self.learning_rate <= 0.0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if self.lam_weight < 0.0:
            raise ConfigError(f"costate loss weight must be non-negative, got {self.lam_weight}")
        if self.lam_weight > 0.0 and not self.kind.value_gradient:
            raise ConfigError(f"lam_weight > 0 needs a value-gradient architecture, not {self.kind.name}")


@dataclass
class TrainReport:
    kind: ArchitectureKind
    seed: int
    optimizer: Optimizer
    loss_history: List[float]
    final_loss: float
    wall_time: float
    status: str
    n_train: int
    n_parameters: int
    rm_l2: Optional[float] = None
    n_test: int = 0


def _records(dataset: Dataset, model: DynamicsModel):
    lam = None if dataset.lam is None else dataset.lam[:, model.reduced_indices]
    return dataset.x, dataset.u, lam


def fit(
    spec: TrainSpec,
    train: Dataset,
    model: DynamicsModel,
    solution: Optional[LqrSolution] = None,
    test: Optional[Dataset] = None,
    deterministic: bool = False,
) -> Tuple[PolicyCheckpoint, TrainReport]:
    """Trains `spec.kind` on `train` and freezes the result into a checkpoint.

    Input scaling is fitted to the training states. With `deterministic`, the wall time is reported as zero so that
    reports are reproducible byte for byte.
    """
    spec.validate()
    if len(train) == 0:
        raise ConfigError("cannot train on an empty dataset")
    if list(train.meta.dims) != [int(d) for d in model.reduced_indices]:
        raise ConfigError(f"dataset coordinates {train.meta.dims} do not match model {model.name}")
    if spec.lam_weight > 0.0 and not train.has_costate:
        raise ConfigError("lam_weight > 0 needs costate data; direct-method datasets carry none")
    kind = spec.kind
    solution = solution or design_lqr(model)
    dims = model.reduced_indices
    scaling = InputScaling.from_data(train.x[:, dims])
    anchor = model_anchor(model, solution, scaling)
    x, u, lam = _records(train, model)
    batch = make_batch(model, kind, x, u, lam if spec.lam_weight > 0.0 else None)
    context = make_context(model, kind, anchor, spec.lam_weight)

    rng = np.random.default_rng(spec.seed)
    params = init_mlp(network_widths(kind, len(dims), model.n_controls, spec.hidden), rng)
    logger.info(
        f"Training {kind.name} ({params.size} parameters) on {len(batch)} points with {spec.optimizer.name}"
    )

    def objective(theta):
        return loss_and_gradient(params.with_flat(theta), batch, context)

    start = time.perf_counter()
    theta = params.flatten()
    history: List[float] = []
    status = "completed"
    if spec.optimizer is Optimizer.adam:
        adam = Adam(spec.learning_rate)
        count = len(batch)
        for epoch in range(spec.epochs):
            order = np.random.default_rng([spec.seed, epoch]).permutation(count)
            total = 0.0
            candidate = theta
            for begin in range(0, count, spec.batch_size):
                rows = order[begin : begin + spec.batch_size]
                value, grad = loss_and_gradient(params.with_flat(candidate), batch.take(rows), context)
                if not np.isfinite(value) or not np.all(np.isfinite(grad)):
                    status = "aborted"
                    break
                total += value * len(rows)
                candidate = adam.step(candidate, grad)
            if status == "aborted":
                logger.error(f"Non-finite loss in epoch {epoch}; keeping the parameters of epoch {epoch - 1}")
                break
            theta = candidate
            history.append(total / count)
            if epoch % 100 == 0 or epoch == spec.epochs - 1:
                logger.debug(f"epoch {epoch}: loss {history[-1]:.6e}")
    else:
        result = minimize_lbfgs(objective, theta, spec.max_iterations, spec.ftol)
        theta, history, status = result.theta, result.history, result.status
    wall_time = 0.0 if deterministic else time.perf_counter() - start

    params = params.with_flat(theta)
    final_loss = loss_and_gradient(params, batch, context, with_gradient=False)[0]
    if not history:
        history = [final_loss]
    checkpoint = finalize_checkpoint(kind, params, solution, model.equilibrium, model.bounds, scaling, dims)

    test_error = None
    n_test = 0 if test is None else len(test)
    if n_test:
        test_error = rm_l2(checkpoint, test.x, test.u, model)
    report = TrainReport(
        kind=kind,
        seed=spec.seed,
        optimizer=spec.optimizer,
        loss_history=[float(v) for v in history],
        final_loss=float(final_loss),
        wall_time=float(wall_time),
        status=status,
        n_train=len(batch),
        n_parameters=params.size,
        rm_l2=test_error,
        n_test=n_test,
    )
    logger.info(f"Trained {kind.name}: loss {final_loss:.4e}, status {status}, RMl2 {test_error}")
    return checkpoint, report


def save_report(report: TrainReport, path: Union[str, os.PathLike]) -> Path:
    """Writes `report`; a directory or checkpoint path gets `report.json` beside it."""
    path = Path(path)
    if path.suffix != ".json" or path.is_dir():
        path = path / REPORT_FILE
    elif path.name != REPORT_FILE:
        path = path.with_name(REPORT_FILE)
    return dump_json(report, path)
