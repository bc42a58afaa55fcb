# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""The eight feedback architectures and their evaluable checkpoints.

Every architecture works on the reduced coordinates `z = x[dims]` of a model, with `dz = z - z_f`, and feeds the
network the scaled input `s = (z - center) / half_range`. Writing `N` for the network at `x`, `N_f` for the network
at `x_f` and `J_f = dN/dz(x_f)`:

| kind           | formula                                                   |
|----------------|-----------------------------------------------------------|
| `lambda_nn`    | `lam = N`                                                 |
| `lambda_qrnet` | `lam = 2P dz + N - N_f`                                   |
| `lambda_jac`   | `lam = (2P - J_f) dz + N - N_f`                           |
| `lambda_mat`   | `lam = (2P + N - N_f) dz`, `N` an n x n matrix            |
| `u_nn`         | `u = sigma(N)`                                            |
| `u_qrnet`      | `u = sigma(sat(u_lqr) + N - N_f)`                         |
| `u_jac`        | `u = sigma(sat(u_lqr) - J_f dz + N - N_f)`                |
| `u_mat`        | `u = sigma(sat(u_lqr) + (N - N_f) dz)`, `N` an m x n matrix |

Value-gradient kinds act through the Hamiltonian minimizer `u = clip(u_f - R^-1 B(x)' lam / 2)`. Matrix outputs are
row-major flattenings.
"""
import enum
import os
from dataclasses import dataclass
from logging import getLogger
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from qrnet.lqr import LqrSolution
from qrnet.models.base import ControlBounds, DynamicsModel, EquilibriumPair
from qrnet.policies.mlp import MlpLayer, MlpParams, mlp_forward, mlp_input_jacobian
from qrnet.policies.saturation import saturation_constants, smooth_saturation_with_derivative
from qrnet.serialization import dump_json, load_json_as
from qrnet.utils import ConfigError, DimensionError, batched_fd_jacobian

logger = getLogger(__name__)

SCHEMA_VERSION = 1


class ArchitectureKind(enum.Enum):
    lambda_nn = "lambda_nn"
    u_nn = "u_nn"
    lambda_qrnet = "lambda_qrnet"
    u_qrnet = "u_qrnet"
    lambda_jac = "lambda_jac"
    u_jac = "u_jac"
    lambda_mat = "lambda_mat"
    u_mat = "u_mat"

    @property
    def value_gradient(self) -> bool:
        return self.name.startswith("lambda")

    @property
    def matrix(self) -> bool:
        return self.name.endswith("_mat")

    @property
    def jacobian(self) -> bool:
        return self.name.endswith("_jac")

    @property
    def anchored(self) -> bool:
        """Subtracts `N(x_f)`, making `x_f` a closed-loop equilibrium."""
        return not self.name.endswith("_nn")

    @property
    def guaranteed(self) -> bool:
        """Recovers the LQR gain at `x_f` for any parameters."""
        return self.jacobian or self.matrix


def parse_kind(kind: Union[str, ArchitectureKind]) -> ArchitectureKind:
    if isinstance(kind, ArchitectureKind):
        return kind
    try:
        return ArchitectureKind[str(kind).replace("-", "_")]
    except KeyError:
        raise ConfigError(f"unknown architecture {kind!r}; choose from {[k.name for k in ArchitectureKind]}") from None


def output_dim(kind: ArchitectureKind, n: int, m: int) -> int:
    """
    >>> output_dim(ArchitectureKind.u_mat, 10, 4)
    40
    """
    rows = n if kind.value_gradient else m
    return rows * n if kind.matrix else rows


def network_widths(kind: ArchitectureKind, n: int, m: int, hidden: Sequence[int]) -> List[int]:
    return [n, *hidden, output_dim(kind, n, m)]


def parameter_count(kind: ArchitectureKind, n: int, m: int, hidden: Sequence[int]) -> int:
    """Exact number of trainable parameters, biases included.

    >>> parameter_count(ArchitectureKind.u_mat, 3, 1, [4, 4])
    55
    """
    widths = network_widths(kind, n, m, hidden)
    return sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))


def table_parameter_count(kind: ArchitectureKind, n: int, m: int, width: int, layers: int) -> int:
    """Leading-order count `w n_out + w n + L w^2` without biases.

    The exact count of `layers` hidden layers of `width` equals this minus `w^2` plus the biases.
    """
    return width * output_dim(kind, n, m) + width * n + layers * width**2


@dataclass(frozen=True, eq=False)
class InputScaling:
    """Affine map of reduced coordinates onto the network's input box, `s = (z - center) / half_range`."""

    center: np.ndarray
    half_range: np.ndarray

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).reshape(-1)
        half = np.asarray(self.half_range, dtype=float).reshape(-1)
        if center.shape != half.shape:
            raise DimensionError(f"scaling center {center.shape} and half range {half.shape} differ")
        if np.any(half <= 0.0) or not np.all(np.isfinite(half)):
            raise DimensionError("scaling half ranges must be positive and finite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_range", half)

    @classmethod
    def identity(cls, n: int) -> "InputScaling":
        return cls(np.zeros(n), np.ones(n))

    @classmethod
    def from_data(cls, z: np.ndarray) -> "InputScaling":
        """Maps the bounding box of `z` onto `[-1, 1]`; constant coordinates get half range 1.

        >>> InputScaling.from_data(np.array([[0.0, 5.0], [4.0, 5.0]])).half_range.tolist()
        [2.0, 1.0]
        """
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if z.shape[0] == 0:
            raise DimensionError("cannot fit a scaling to zero points")
        lo, hi = z.min(axis=0), z.max(axis=0)
        half = 0.5 * (hi - lo)
        half[half <= 0.0] = 1.0
        return cls(0.5 * (hi + lo), half)

    def scale(self, z: np.ndarray) -> np.ndarray:
        return (np.asarray(z, dtype=float) - self.center) / self.half_range

    def unscale(self, s: np.ndarray) -> np.ndarray:
        return self.center + self.half_range * np.asarray(s, dtype=float)


@dataclass(frozen=True, eq=False)
class Anchor:
    """Everything an architecture needs besides the network: goal, bounds, LQR terms and input scaling."""

    dims: np.ndarray
    z_f: np.ndarray
    u_f: np.ndarray
    bounds: ControlBounds
    P: np.ndarray
    K: np.ndarray
    scaling: InputScaling

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def m(self) -> int:
        return len(self.u_f)

    def offset(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)[..., self.dims] - self.z_f

    def inputs(self, x: np.ndarray) -> np.ndarray:
        return self.scaling.scale(np.asarray(x, dtype=float)[..., self.dims])

    def goal_inputs(self) -> np.ndarray:
        return self.scaling.scale(self.z_f)

    def lqr_control(self, dz: np.ndarray) -> np.ndarray:
        return self.u_f - dz @ self.K.T


def model_anchor(
    model: DynamicsModel, solution: LqrSolution, scaling: Optional[InputScaling] = None
) -> Anchor:
    dims = np.asarray(model.reduced_indices)
    return Anchor(
        dims=dims,
        z_f=np.asarray(model.equilibrium.x_f, dtype=float)[dims],
        u_f=np.asarray(model.equilibrium.u_f, dtype=float),
        bounds=model.bounds,
        P=solution.P,
        K=solution.K,
        scaling=scaling or InputScaling.identity(len(dims)),
    )


def network_goal_terms(kind: ArchitectureKind, params: MlpParams, anchor: Anchor):
    """`(N(x_f), dN/dz(x_f))` as the kind needs them; the Jacobian is None unless the kind subtracts it."""
    s_f = anchor.goal_inputs()
    N_f = mlp_forward(params, s_f) if kind.anchored else None
    J_f = mlp_input_jacobian(params, s_f) / anchor.scaling.half_range if kind.jacobian else None
    return N_f, J_f


@dataclass(eq=False)
class ForwardPass:
    """Intermediate values of one batched evaluation, kept for gradients."""

    dz: np.ndarray  # (N, n)
    N: np.ndarray  # (N, n_out)
    output: np.ndarray  # lam for value-gradient kinds, pre-saturation control for the others
    sat_active: Optional[np.ndarray] = None  # (N, m) hard clip of u_lqr active


def architecture_forward(
    kind: ArchitectureKind,
    params: MlpParams,
    anchor: Anchor,
    x: np.ndarray,
    N_f: Optional[np.ndarray],
    J_f: Optional[np.ndarray],
) -> ForwardPass:
    """Evaluates the kind's formula on a batch of full states, without the outer saturation."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    dz = anchor.offset(x)
    N = np.atleast_2d(mlp_forward(params, anchor.inputs(x)))
    n, m = anchor.n, anchor.m

    if kind.value_gradient:
        if kind is ArchitectureKind.lambda_nn:
            return ForwardPass(dz, N, N)
        linear = 2.0 * dz @ anchor.P
        if kind is ArchitectureKind.lambda_mat:
            M = (N - N_f).reshape(-1, n, n)
            out = linear + np.einsum("kij,kj->ki", M, dz)
        else:
            out = linear + N - N_f
            if kind.jacobian:
                out = out - dz @ J_f.T
        return ForwardPass(dz, N, out)

    if kind is ArchitectureKind.u_nn:
        return ForwardPass(dz, N, N)
    u_lqr = anchor.lqr_control(dz)
    active = (u_lqr < anchor.bounds.u_min) | (u_lqr > anchor.bounds.u_max)
    out = anchor.bounds.clip(u_lqr)
    if kind is ArchitectureKind.u_mat:
        M = (N - N_f).reshape(-1, m, n)
        out = out + np.einsum("kij,kj->ki", M, dz)
    else:
        out = out + N - N_f
        if kind.jacobian:
            out = out - dz @ J_f.T
    return ForwardPass(dz, N, out, active)


def control_from_value_gradient(
    model: DynamicsModel, x: np.ndarray, lam: np.ndarray, dims: Optional[np.ndarray] = None
) -> np.ndarray:
    """Minimizer of the Hamiltonian over the control box, `clip(u_f - R^-1 B(x)' lam / 2)`.

    `lam` lives on the coordinates `dims` (the model's reduced coordinates by default).
    """
    dims = model.reduced_indices if dims is None else np.asarray(dims)
    B = np.asarray(model.control_matrix(x), dtype=float)[..., dims, :]
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] != len(dims):
        raise DimensionError(f"costate must have {len(dims)} entries, got shape {lam.shape}")
    u = model.equilibrium.u_f - 0.5 * np.einsum("...i,...im->...m", lam, B) @ model.control_weight_inv.T
    return model.bounds.clip(u)


@dataclass
class PolicyCheckpoint:
    """A self-contained evaluable controller: architecture, trained network and frozen anchor terms.

    `x_f` is the full goal state; `P`, `K`, the scaling and the network all live on the coordinates `dims`.
    """

    kind: ArchitectureKind
    dims: List[int]
    layers: List[MlpLayer]
    x_f: np.ndarray
    u_f: np.ndarray
    bounds: ControlBounds
    P: np.ndarray
    K: np.ndarray
    scale_center: np.ndarray
    scale_half_range: np.ndarray
    frozen_N_xf: Optional[np.ndarray] = None
    frozen_J_xf: Optional[np.ndarray] = None
    activation: str = "tanh"
    schema_version: int = SCHEMA_VERSION

    def mlp(self) -> MlpParams:
        return MlpParams(self.layers, self.activation)

    def anchor(self) -> Anchor:
        dims = np.asarray(self.dims, dtype=int)
        return Anchor(
            dims=dims,
            z_f=np.asarray(self.x_f, dtype=float)[dims],
            u_f=np.asarray(self.u_f, dtype=float),
            bounds=self.bounds,
            P=np.atleast_2d(self.P),
            K=np.atleast_2d(self.K),
            scaling=InputScaling(self.scale_center, self.scale_half_range),
        )

    def frozen_terms(self):
        N_f = None if self.frozen_N_xf is None else np.asarray(self.frozen_N_xf, dtype=float)
        J_f = None if self.frozen_J_xf is None else np.atleast_2d(self.frozen_J_xf)
        return N_f, J_f


def finalize_checkpoint(
    kind: Union[str, ArchitectureKind],
    params: MlpParams,
    solution: LqrSolution,
    equilibrium: EquilibriumPair,
    bounds: ControlBounds,
    scaling: InputScaling,
    dims: Optional[Sequence[int]] = None,
) -> PolicyCheckpoint:
    """Freezes `N(x_f)` and, for the Jacobian kinds, `dN/dz(x_f)` next to a copy of the parameters."""
    kind = parse_kind(kind)
    x_f = np.asarray(equilibrium.x_f, dtype=float)
    dims = list(range(len(x_f))) if dims is None else [int(d) for d in dims]
    n, m = len(dims), len(equilibrium.u_f)
    expected = network_widths(kind, n, m, [])
    if params.n_in != expected[0] or params.n_out != expected[-1]:
        raise DimensionError(
            f"{kind.name} on {n} coordinates and {m} controls needs a {expected[0]} -> {expected[-1]} network, "
            f"got {params.n_in} -> {params.n_out}"
        )
    params = params.copy()
    checkpoint = PolicyCheckpoint(
        kind=kind,
        dims=dims,
        layers=params.layers,
        x_f=x_f.copy(),
        u_f=np.asarray(equilibrium.u_f, dtype=float).copy(),
        bounds=bounds,
        P=np.array(solution.P, dtype=float),
        K=np.array(solution.K, dtype=float),
        scale_center=scaling.center.copy(),
        scale_half_range=scaling.half_range.copy(),
        activation=params.activation,
    )
    N_f, J_f = network_goal_terms(kind, params, checkpoint.anchor())
    checkpoint.frozen_N_xf = N_f
    checkpoint.frozen_J_xf = J_f
    return checkpoint


def _require(kind: ArchitectureKind, value_gradient: bool) -> None:
    if kind.value_gradient != value_gradient:
        wanted = "value-gradient" if value_gradient else "control"
        raise ConfigError(f"{kind.name} is not a {wanted} architecture")


def eval_value_gradient_model(checkpoint: PolicyCheckpoint, x: np.ndarray) -> np.ndarray:
    """The learned costate on the checkpoint's coordinates, from the frozen terms."""
    _require(checkpoint.kind, True)
    single = np.ndim(x) == 1
    N_f, J_f = checkpoint.frozen_terms()
    lam = architecture_forward(checkpoint.kind, checkpoint.mlp(), checkpoint.anchor(), x, N_f, J_f).output
    return lam[0] if single else lam


def eval_control_model(checkpoint: PolicyCheckpoint, x: np.ndarray) -> np.ndarray:
    _require(checkpoint.kind, False)
    single = np.ndim(x) == 1
    anchor = checkpoint.anchor()
    N_f, J_f = checkpoint.frozen_terms()
    v = architecture_forward(checkpoint.kind, checkpoint.mlp(), anchor, x, N_f, J_f).output
    u, _ = smooth_saturation_with_derivative(v, anchor.bounds, anchor.u_f)
    return u[0] if single else u


class QRnetPolicy:
    """Feedback `x -> u` of a checkpoint. Value-gradient kinds also need the model for `B(x)` and `R`."""

    def __init__(self, checkpoint: PolicyCheckpoint, model: Optional[DynamicsModel] = None):
        if checkpoint.kind.value_gradient and model is None:
            raise ConfigError(f"{checkpoint.kind.name} policies need the dynamics model to turn costates into controls")
        if model is not None and model.n_controls != len(checkpoint.u_f):
            raise DimensionError(f"model has {model.n_controls} controls, checkpoint {len(checkpoint.u_f)}")
        self.checkpoint = checkpoint
        self.kind = checkpoint.kind
        self.model = model
        self.params = checkpoint.mlp()
        self.anchor = checkpoint.anchor()
        self.dims = self.anchor.dims
        self.N_f, self.J_f = checkpoint.frozen_terms()
        self._sat = saturation_constants(self.anchor.bounds, self.anchor.u_f)

    def _forward(self, x: np.ndarray) -> ForwardPass:
        return architecture_forward(self.kind, self.params, self.anchor, x, self.N_f, self.J_f)

    def value_gradient(self, x: np.ndarray) -> np.ndarray:
        _require(self.kind, True)
        lam = self._forward(x).output
        return lam[0] if np.ndim(x) == 1 else lam

    def _lam_control(self, x: np.ndarray, lam: np.ndarray) -> np.ndarray:
        B = np.asarray(self.model.control_matrix(x), dtype=float)[..., self.dims, :]
        return self.anchor.u_f - 0.5 * np.einsum("ki,kim->km", lam, B) @ self.model.control_weight_inv.T

    def __call__(self, x: np.ndarray) -> np.ndarray:
        single = np.ndim(x) == 1
        x2 = np.atleast_2d(np.asarray(x, dtype=float))
        out = self._forward(x2).output
        if self.kind.value_gradient:
            u = self.anchor.bounds.clip(self._lam_control(x2, out))
        else:
            u, _ = smooth_saturation_with_derivative(out, self.anchor.bounds, self.anchor.u_f, self._sat)
        return u[0] if single else u

    def _network_jacobian(self, x: np.ndarray) -> np.ndarray:
        """dN/dz, shape (N, n_out, n)."""
        return mlp_input_jacobian(self.params, self.anchor.inputs(x)) / self.anchor.scaling.half_range

    def _output_jacobian(self, x: np.ndarray, forward: ForwardPass) -> np.ndarray:
        """d(output)/dz per point, shape (N, rows, n)."""
        count, n, m = x.shape[0], self.anchor.n, self.anchor.m
        dN = self._network_jacobian(x)
        kind = self.kind
        if kind.value_gradient:
            base = np.broadcast_to(2.0 * self.anchor.P, (count, n, n)) if kind.anchored else np.zeros((count, n, n))
            if kind.matrix:
                M = (forward.N - self.N_f).reshape(count, n, n)
                return base + M + np.einsum("kijl,kj->kil", dN.reshape(count, n, n, n), forward.dz)
            jac = base + dN
        else:
            if kind is ArchitectureKind.u_nn:
                return dN
            lqr = -np.broadcast_to(self.anchor.K, (count, m, n)).copy()
            lqr[forward.sat_active] = 0.0
            if kind.matrix:
                M = (forward.N - self.N_f).reshape(count, m, n)
                return lqr + M + np.einsum("kijl,kj->kil", dN.reshape(count, m, n, n), forward.dz)
            jac = lqr + dN
        if kind.jacobian:
            jac = jac - self.J_f
        return jac

    def reduced_jacobian(self, x: np.ndarray) -> np.ndarray:
        """du/dz on the reduced coordinates, shape (m, n), or (N, m, n) for a batch."""
        single = np.ndim(x) == 1
        x2 = np.atleast_2d(np.asarray(x, dtype=float))
        forward = self._forward(x2)
        jac_out = self._output_jacobian(x2, forward)
        if not self.kind.value_gradient:
            _, slope = smooth_saturation_with_derivative(forward.output, self.anchor.bounds, self.anchor.u_f, self._sat)
            jac = slope[:, :, None] * jac_out
        else:
            lam = forward.output
            B = np.asarray(self.model.control_matrix(x2), dtype=float)[..., self.dims, :]
            dBlam = self._control_matrix_term(x2, lam)
            Rinv = self.model.control_weight_inv
            jac = -0.5 * np.einsum("mj,kjl->kml", Rinv, np.einsum("kij,kil->kjl", B, jac_out) + dBlam)
            interior = self.anchor.bounds.interior_mask(self._lam_control(x2, lam))
            jac[~interior] = 0.0
        return jac[0] if single else jac

    def _control_matrix_term(self, x: np.ndarray, lam: np.ndarray) -> np.ndarray:
        """d(B(x)'lam)/dz with lam held fixed, shape (N, m, n)."""
        count, n_full = x.shape
        lam_rep = np.repeat(lam, n_full, axis=0)
        lam_rep = np.concatenate([lam_rep, lam_rep], axis=0)
        dims = self.dims

        def product(points):
            B = np.asarray(self.model.control_matrix(points), dtype=float)[..., dims, :]
            return np.einsum("ki,kim->km", lam_rep, B)

        full = batched_fd_jacobian(product, x)
        return np.stack([full[k] @ self.model.embedding_jacobian(x[k]) for k in range(count)])


def policy_state_jacobian(policy, x: np.ndarray, model: Optional[DynamicsModel] = None) -> np.ndarray:
    """du/dz of any policy exposing `reduced_jacobian` (QRnet or LQR), or of a checkpoint."""
    if isinstance(policy, PolicyCheckpoint):
        policy = QRnetPolicy(policy, model)
    return policy.reduced_jacobian(x)


def save_checkpoint(checkpoint: PolicyCheckpoint, path: Union[str, os.PathLike]) -> Path:
    path = dump_json(checkpoint, path)
    logger.info(f"Saved {checkpoint.kind.name} checkpoint to {path}")
    return path


def load_checkpoint(path: Union[str, os.PathLike]) -> PolicyCheckpoint:
    checkpoint = load_json_as(PolicyCheckpoint, path)
    if checkpoint.schema_version != SCHEMA_VERSION:
        raise ConfigError(f"{path}: checkpoint schema {checkpoint.schema_version}, expected {SCHEMA_VERSION}")
    checkpoint.mlp()
    return checkpoint
