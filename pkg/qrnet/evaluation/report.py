# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Evaluation reports: a JSON summary plus a per-run CSV table."""
import csv
import os
from dataclasses import dataclass, field
from logging import getLogger
from pathlib import Path
from typing import List, Optional, Tuple, Union

from qrnet.evaluation.monte_carlo import (
    ComparisonSummary,
    MonteCarloResult,
    OptimalitySummary,
    RunRecord,
    StabilitySummary,
)
from qrnet.evaluation.stability import LinearStability
from qrnet.serialization import dump_json
from qrnet.utils import format_float

logger = getLogger(__name__)

RUN_COLUMNS = [
    "index",
    "termination",
    "final_error",
    "cost",
    "t_final",
    "max_drift",
    "optimal_cost",
    "suboptimality",
    "baseline_cost",
    "excluded",
]


@dataclass
class EvalReport:
    mode: str
    seed: int = 0
    kind: Optional[str] = None
    linear: Optional[LinearStability] = None
    stability: Optional[StabilitySummary] = None
    optimality: Optional[OptimalitySummary] = None
    comparison: Optional[ComparisonSummary] = None
    runs: List[RunRecord] = field(default_factory=list)

    def merge(self, result: MonteCarloResult) -> "EvalReport":
        """Folds a Monte Carlo result in. The run table of the first result is kept."""
        self.stability = result.stability or self.stability
        self.optimality = result.optimality or self.optimality
        self.comparison = result.comparison or self.comparison
        if not self.runs:
            self.runs = list(result.runs)
        return self


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_runs_csv(runs: List[RunRecord], path: Union[str, os.PathLike]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(runs[0].x0) if runs else 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RUN_COLUMNS + [f"x0_{i}" for i in range(n)])
        for run in runs:
            row = [_cell(getattr(run, column)) for column in RUN_COLUMNS]
            writer.writerow(row + [format_float(v) for v in run.x0])
    return path


def save_eval_report(report: EvalReport, path: Union[str, os.PathLike]) -> Tuple[Path, Path]:
    """Writes `report` as JSON and its runs as `<stem>_runs.csv` beside it."""
    path = Path(path)
    if path.suffix != ".json":
        path = path / "report.json"
    json_path = dump_json(report, path)
    csv_path = write_runs_csv(report.runs, path.with_name(path.stem + "_runs.csv"))
    logger.info(f"Wrote evaluation report to {json_path}")
    return json_path, csv_path
