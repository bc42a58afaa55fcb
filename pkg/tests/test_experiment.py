# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

import csv
import json
from pathlib import Path

import pytest

from qrnet.experiment import (
    CELLS_FILE,
    MANIFEST_FILE,
    SUMMARY_FILE,
    EvalSpec,
    ExperimentConfig,
    derive_seed,
    emit_report,
    run_experiment,
    summary_statistics,
)
from qrnet.policies.architectures import ArchitectureKind
from qrnet.training.fit import TrainSpec

from .testutils import *

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def tiny_config(output_dir: Path, **kwargs) -> ExperimentConfig:
    settings = dict(
        model=str(CONFIGS / "double_integrator.yaml"),
        sizes=[2],
        trials=1,
        architectures=[ArchitectureKind.u_mat],
        test_size=2,
        train=TrainSpec(hidden=[4], epochs=3, batch_size=64),
        eval=EvalSpec(n_mc=2),
        output_dir=str(output_dir),
        deterministic=True,
    )
    settings.update(kwargs)
    return ExperimentConfig(**settings)


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "tiny"
    run_experiment(tiny_config(out))
    return out


def test_derive_seed():
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert derive_seed(0, 1, 2) != derive_seed(0, 1, 2, 0)
    assert 0 <= derive_seed(7) < 2**32


def test_summary_statistics():
    stats = summary_statistics([4.0, 1.0, 3.0, 2.0])
    assert (stats["min"], stats["max"], stats["median"]) == (1.0, 4.0, 2.5)
    assert summary_statistics([])["median"] is None


def test_config_validation(tmp_path):
    with raises(ConfigError):
        run_experiment(tiny_config(tmp_path, trials=0))
    with raises(ConfigError):
        run_experiment(tiny_config(tmp_path, sizes=[]))
    with raises(ConfigError):
        run_experiment(tiny_config(tmp_path, model=str(tmp_path / "absent.yaml")))
    with raises(ConfigError):
        run_experiment(tiny_config(tmp_path, workers=0))


def test_empty_grid_writes_an_empty_manifest(tmp_path):
    out = run_experiment(tiny_config(tmp_path / "empty", architectures=[]))
    manifest = json.loads((out / MANIFEST_FILE).read_text())
    assert manifest["cells"] == []
    assert [artifact["path"] for artifact in manifest["artifacts"]] == ["config.json"]
    with raises(ConfigError, match="no completed cells"):
        emit_report(out)


def test_report_needs_a_manifest(tmp_path):
    with raises(ConfigError):
        emit_report(tmp_path)


def test_tiny_run(finished_run):
    manifest = json.loads((finished_run / MANIFEST_FILE).read_text())
    cells = {cell["architecture"]: cell for cell in manifest["cells"]}
    assert sorted(cells) == ["lqr", "u_mat"]
    cell = cells["u_mat"]
    assert cell["status"] == "ok", cell["error"]
    assert cell["train_time"] == 0.0
    assert cell["abscissa"] < 0.0
    assert cell["data_seed"] == derive_seed(0, 0, 0)
    assert cell["train_seed"] == derive_seed(0, 0, 0, 0)
    names = {Path(artifact["path"]).name for artifact in cell["artifacts"]}
    assert {"checkpoint.json", "report.json", "eval.json", "eval_runs.csv", "done.json"} <= names
    assert cells["lqr"]["worst_case_failure"] < 1e-6
    paths = [artifact["path"] for artifact in manifest["artifacts"]]
    assert paths == sorted(paths)
    assert any(path.startswith("datasets/") for path in paths)


def test_rerun_computes_nothing_new(finished_run, caplog):
    before = (finished_run / MANIFEST_FILE).read_bytes()
    with caplog.at_level("INFO"):
        run_experiment(tiny_config(finished_run))
    assert (finished_run / MANIFEST_FILE).read_bytes() == before
    assert "already done" in caplog.text
    assert "Reusing training dataset" in caplog.text


def test_emit_report_is_reproducible(finished_run):
    cells_path, summary_path = emit_report(finished_run)
    assert (cells_path.name, summary_path.name) == (CELLS_FILE, SUMMARY_FILE)
    first = cells_path.read_bytes(), summary_path.read_bytes()
    emit_report(finished_run)
    assert (cells_path.read_bytes(), summary_path.read_bytes()) == first

    with open(cells_path, newline="") as f:
        rows = list(csv.DictReader(f))
    # the baseline comes first
    assert [row["architecture"] for row in rows] == ["lqr", "u_mat"]
    with open(summary_path, newline="") as f:
        summary = list(csv.DictReader(f))
    u_mat = next(row for row in summary if row["architecture"] == "u_mat")
    assert (u_mat["n_cells"], u_mat["n_ok"]) == ("1", "1")
    assert u_mat["abscissa_median"] == u_mat["abscissa_min"] == u_mat["abscissa_max"]


def test_identical_configs_give_identical_artifacts(tmp_path, finished_run):
    other = run_experiment(tiny_config(tmp_path / "again"))
    files = sorted(p.relative_to(finished_run) for p in finished_run.rglob("*") if p.is_file())
    compared = [p for p in files if p.parts[0] in ("datasets", "cells")]
    assert any(p.name == "checkpoint.json" for p in compared)
    for relative in compared:
        assert (other / relative).read_bytes() == (finished_run / relative).read_bytes(), relative


def test_parallel_cells_match_a_single_worker(tmp_path):
    architectures = [ArchitectureKind.u_mat, ArchitectureKind.u_jac]
    serial = run_experiment(tiny_config(tmp_path / "serial", architectures=architectures))
    parallel = run_experiment(tiny_config(tmp_path / "parallel", architectures=architectures, workers=2))

    def cells(run):
        return json.loads((run / MANIFEST_FILE).read_text())["cells"]

    assert [cell["architecture"] for cell in cells(parallel)] == ["lqr", "u_mat", "u_jac"]
    assert cells(parallel) == cells(serial)
    files = sorted(p.relative_to(serial) for p in serial.rglob("*") if p.is_file())
    for relative in (p for p in files if p.parts[0] in ("datasets", "cells")):
        assert (parallel / relative).read_bytes() == (serial / relative).read_bytes(), relative
