# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

from .dataset import (
    Dataset,
    DatasetMeta,
    DiscardRecord,
    SolverMethod,
    dataset_from_records,
    generate_dataset,
    load_dataset,
    merge_datasets,
    save_dataset,
    split_dataset,
)
from .direct import DirectSettings, HermiteSimpson, solve_open_loop_direct
from .hamiltonian import hamiltonian, minimize_hamiltonian, pmp_rhs
from .indirect import IndirectSettings, solve_open_loop_indirect
from .trajectory import ExtremalTrajectory, lqr_rollout


__all__ = [
    "Dataset",
    "DatasetMeta",
    "DirectSettings",
    "DiscardRecord",
    "ExtremalTrajectory",
    "HermiteSimpson",
    "IndirectSettings",
    "SolverMethod",
    "dataset_from_records",
    "generate_dataset",
    "hamiltonian",
    "load_dataset",
    "lqr_rollout",
    "merge_datasets",
    "minimize_hamiltonian",
    "pmp_rhs",
    "save_dataset",
    "solve_open_loop_direct",
    "solve_open_loop_indirect",
    "split_dataset",
]
