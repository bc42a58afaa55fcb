# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Command line entry point.

```
qrnet <command> [--config FILE] [--seed N] [--workers N] [--deterministic] [--log_level LEVEL] [--field value ...]
```

Every command is a dataclass parsed by draccus; `--config` names a YAML/JSON file whose values the remaining flags
override. Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import csv
import enum
import logging
import sys
from dataclasses import dataclass, field
from logging import getLogger
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Type

import draccus
import numpy as np
from draccus.utils import DraccusException

from qrnet.evaluation.monte_carlo import mc_compare, mc_optimality, mc_stability
from qrnet.evaluation.report import EvalReport, save_eval_report
from qrnet.evaluation.simulate import SimSettings, simulate_closed_loop
from qrnet.evaluation.stability import linear_stability
from qrnet.experiment import ExperimentConfig, emit_report, run_experiment
from qrnet.lqr import design_lqr, model_lqr_policy
from qrnet.models.base import DynamicsModel
from qrnet.models.config import load_model_config
from qrnet.models.sampling import SamplingDomain, sample_initial_conditions
from qrnet.ocp.dataset import SolverMethod, generate_dataset, load_dataset, save_dataset, split_dataset
from qrnet.ocp.direct import DirectSettings
from qrnet.ocp.indirect import IndirectSettings
from qrnet.policies.architectures import QRnetPolicy, load_checkpoint, save_checkpoint
from qrnet.serialization import dump_json
from qrnet.training.fit import TrainSpec, fit, save_report
from qrnet.utils import ConfigError, NumericalError, format_float

logger = getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


@dataclass
class CommonOptions:
    # path of the model config file
    model: str = "configs/burgers.yaml"
    seed: int = 0
    workers: int = 1
    deterministic: bool = False

    def build_model(self) -> DynamicsModel:
        return load_model_config(self.model).build()


@dataclass
class TrimCommand(CommonOptions):
    output: str = "trim.json"


@dataclass
class LqrCommand(CommonOptions):
    output: str = "lqr.json"


@dataclass
class DatagenCommand(CommonOptions):
    n_traj: int = 16
    method: SolverMethod = SolverMethod.indirect
    domain: Optional[SamplingDomain] = None
    indirect: IndirectSettings = field(default_factory=IndirectSettings)
    direct: DirectSettings = field(default_factory=DirectSettings)
    output: str = "data/train"
    # with a positive fraction, `output` gets `train/` and `test/` subdirectories split by trajectory
    test_fraction: float = 0.0


@dataclass
class TrainCommand(CommonOptions):
    data: str = "data/train"
    # held-out dataset for RMl2
    test: Optional[str] = None
    output: str = "checkpoint.json"
    train: TrainSpec = field(default_factory=TrainSpec)


@dataclass
class SimulateCommand(CommonOptions):
    # LQR when unset
    checkpoint: Optional[str] = None
    # drawn from `domain` with `seed` when unset
    x0: Optional[List[float]] = None
    domain: Optional[SamplingDomain] = None
    sim: SimSettings = field(default_factory=SimSettings)
    output: str = "trajectory.csv"


class EvalMode(enum.Enum):
    linear = "linear"
    mc = "mc"


@dataclass
class EvalCommand(CommonOptions):
    mode: EvalMode = EvalMode.linear
    # LQR when unset
    checkpoint: Optional[str] = None
    n_mc: int = 100
    domain: Optional[SamplingDomain] = None
    # dataset with optimal costs for the suboptimality campaign
    data: Optional[str] = None
    compare_lqr: bool = False
    sim: SimSettings = field(default_factory=SimSettings)
    output: str = "eval/report.json"


@dataclass
class ReportCommand:
    run_dir: str = "runs/experiment"


def _policy(options, model: DynamicsModel):
    solution = design_lqr(model)
    if options.checkpoint is None:
        return model_lqr_policy(model, solution), solution, None
    checkpoint = load_checkpoint(options.checkpoint)
    return QRnetPolicy(checkpoint, model), solution, checkpoint.kind.name


def trim(options: TrimCommand) -> None:
    model = options.build_model()
    x_f, u_f = model.equilibrium.x_f, model.equilibrium.u_f
    residual = float(np.max(np.abs(model.equilibrium_residual(x_f, u_f))))
    dump_json({"model": model.describe(), "x_f": x_f, "u_f": u_f, "residual": residual}, options.output)
    logger.info(f"Equilibrium residual {residual:.3e}, written to {options.output}")


def lqr(options: LqrCommand) -> None:
    model = options.build_model()
    solution = design_lqr(model)
    dump_json(solution, options.output)
    logger.info(f"LQR closed-loop abscissa {solution.closed_loop_abscissa:.6f}, written to {options.output}")


def datagen(options: DatagenCommand) -> None:
    model = options.build_model()
    settings = options.indirect if options.method is SolverMethod.indirect else options.direct
    dataset = generate_dataset(
        model, options.n_traj, options.method, options.seed, options.domain, settings, options.workers
    )
    if options.test_fraction > 0.0:
        train_set, test_set = split_dataset(dataset, options.test_fraction, options.seed)
        save_dataset(train_set, Path(options.output) / "train")
        save_dataset(test_set, Path(options.output) / "test")
    else:
        save_dataset(dataset, options.output)
    logger.info(f"Wrote {dataset.meta.n_converged} of {options.n_traj} trajectories to {options.output}")


def train(options: TrainCommand) -> None:
    model = options.build_model()
    spec = options.train
    spec.seed = options.seed
    test = load_dataset(options.test) if options.test else None
    checkpoint, report = fit(spec, load_dataset(options.data), model, test=test, deterministic=options.deterministic)
    save_checkpoint(checkpoint, options.output)
    save_report(report, options.output)


def simulate(options: SimulateCommand) -> None:
    model = options.build_model()
    policy, _, _ = _policy(options, model)
    if options.x0 is not None:
        x0 = np.asarray(options.x0, dtype=float)
    else:
        x0 = sample_initial_conditions(options.domain or model.default_domain(), 1, options.seed, model)[0]
    result = simulate_closed_loop(model, policy, x0, options.sim)
    path = Path(options.output)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        n, m = result.x.shape[1], result.u.shape[1]
        writer.writerow(["t"] + [f"x_{i}" for i in range(n)] + [f"u_{j}" for j in range(m)] + ["cost"])
        for k in range(len(result.t)):
            values = [result.t[k], *result.x[k], *result.u[k], result.cost[k]]
            writer.writerow([format_float(v) for v in values])
    logger.info(
        f"Simulation ended by {result.termination.name} at t={result.t[-1]:g}: "
        f"cost {result.total_cost:.6g}, final error {result.final_error:.3e}"
    )


def evaluate(options: EvalCommand) -> None:
    model = options.build_model()
    policy, solution, kind = _policy(options, model)
    report = EvalReport(mode=options.mode.name, seed=options.seed, kind=kind)
    if options.mode is EvalMode.linear:
        report.linear = linear_stability(model, policy, solution.closed_loop_abscissa)
        if not report.linear.stable:
            logger.warning(f"Closed loop is not locally stable: abscissa {report.linear.abscissa:.6f}")
    else:
        stability = mc_stability(model, policy, options.domain, options.n_mc, options.seed, options.sim, options.workers)
        report.merge(stability)
        if options.compare_lqr and options.checkpoint is not None:
            x0s = np.array([run.x0 for run in stability.runs])
            baseline = model_lqr_policy(model, solution)
            report.comparison = mc_compare(model, policy, baseline, x0s, options.sim, options.workers).comparison
        if options.data is not None:
            data = load_dataset(options.data)
            optimality = mc_optimality(
                model, policy, data.x0, data.V, options.sim, options.workers, limit=options.n_mc, seed=options.seed
            )
            report.optimality = optimality.optimality
    save_eval_report(report, options.output)


def run(config: ExperimentConfig) -> None:
    run_experiment(config)


def report(options: ReportCommand) -> None:
    emit_report(options.run_dir)


@dataclass(frozen=True)
class Command:
    config_class: Type
    action: Callable
    # draccus field names the global --seed and --workers flags map onto
    seed_field: Optional[str] = "seed"
    workers_field: Optional[str] = "workers"
    deterministic_field: Optional[str] = "deterministic"
    # short flag names accepted on the command line, rewritten onto draccus field paths
    aliases: Mapping[str, str] = field(default_factory=dict)


TRAIN_ALIASES = {
    "arch": "train.kind",
    "optimizer": "train.optimizer",
    "lr": "train.learning_rate",
    "batch": "train.batch_size",
    "epochs": "train.epochs",
    "hidden": "train.hidden",
    "out": "output",
}
EVAL_ALIASES = {"policy": "checkpoint", "n": "n_mc", "out": "output"}

COMMANDS: Dict[str, Command] = {
    "trim": Command(TrimCommand, trim),
    "lqr": Command(LqrCommand, lqr),
    "datagen": Command(DatagenCommand, datagen),
    "train": Command(TrainCommand, train, aliases=TRAIN_ALIASES),
    "simulate": Command(SimulateCommand, simulate),
    "eval": Command(EvalCommand, evaluate, aliases=EVAL_ALIASES),
    "run": Command(ExperimentConfig, run, seed_field="master_seed"),
    "report": Command(ReportCommand, report, None, None, None),
}


def _global_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrnet", description=__doc__.splitlines()[0], add_help=False, allow_abbrev=False
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--deterministic", action="store_true")
    parser.add_argument("--log_level", default="INFO")
    return parser


def _rewrite_alias(arg: str, aliases: Mapping[str, str]) -> str:
    name, sep, value = arg.partition("=")
    if name.startswith("--") and name[2:] in aliases:
        return f"--{aliases[name[2:]]}{sep}{value}"
    return arg


def translate_args(argv: Sequence[str]) -> Tuple[str, str, List[str]]:
    """Splits `argv` into the command, the log level and the arguments handed to draccus.

    >>> translate_args(["eval", "mc", "--seed", "3"])
    ('eval', 'INFO', ['--mode', 'mc', '--seed', '3'])
    >>> translate_args(["eval", "mc", "--policy", "ckpt.json", "--n=10"])[2]
    ['--mode', 'mc', '--checkpoint', 'ckpt.json', '--n_mc=10']
    """
    argv = list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        _global_parser().print_help()
        raise SystemExit(EXIT_OK)
    known, rest = _global_parser().parse_known_args(argv)
    command = COMMANDS[known.command]
    if known.command == "eval" and rest and rest[0] in EvalMode.__members__:
        rest = ["--mode", rest[0]] + rest[1:]
    rest = [_rewrite_alias(arg, command.aliases) for arg in rest]
    forwarded: List[str] = []
    if known.config is not None:
        forwarded += ["--config_path", known.config]
    for flag, target in (("seed", command.seed_field), ("workers", command.workers_field)):
        value = getattr(known, flag)
        if value is not None:
            if target is None:
                raise ConfigError(f"{known.command} takes no --{flag}")
            forwarded += [f"--{target}", str(value)]
    if known.deterministic:
        if command.deterministic_field is None:
            raise ConfigError(f"{known.command} takes no --deterministic")
        forwarded += [f"--{command.deterministic_field}", "true"]
    return known.command, known.log_level, forwarded + rest


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        name, log_level, args = translate_args(argv)
    except ConfigError as e:
        print(f"qrnet: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=log_level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    command = COMMANDS[name]
    try:
        options = draccus.parse(command.config_class, args=args, prog=f"qrnet {name}", exit_on_error=False)
        command.action(options)
    except SystemExit as e:
        # --help
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    except (ConfigError, DraccusException) as e:
        logger.error(f"{name}: configuration error: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error(f"{name}: numerical failure: {e}")
        return EXIT_NUMERICAL
    return EXIT_OK
