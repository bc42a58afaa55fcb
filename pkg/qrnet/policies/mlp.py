# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Fully connected tanh networks with exact input Jacobians and parameter gradients.

A network with hidden widths `w_1..w_L` computes

    z_0 = x,  z_k = tanh(W_k z_{k-1} + b_k)  (k = 1..L),  N(x) = W_{L+1} z_L + b_{L+1}.

Everything is batched over a leading axis. Parameter gradients come in two flavors: of `<S, N(x)>` (plain
backpropagation) and of `<S, dN/dx(x)>`, the mixed second-derivative path needed when the loss depends on the
network's Jacobian.
"""
from dataclasses import dataclass
from logging import getLogger
from typing import List, Sequence, Tuple

import numpy as np

from qrnet.utils import DimensionError

logger = getLogger(__name__)

ACTIVATIONS = ("tanh",)


@dataclass(eq=False)
class MlpLayer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)


@dataclass(eq=False)
class MlpParams:
    layers: List[MlpLayer]
    activation: str = "tanh"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise DimensionError(f"unsupported activation {self.activation}; expected one of {ACTIVATIONS}")
        if not self.layers:
            raise DimensionError("an MLP needs at least one layer")
        for k, layer in enumerate(self.layers):
            layer.W = np.atleast_2d(np.asarray(layer.W, dtype=float))
            layer.b = np.asarray(layer.b, dtype=float).reshape(-1)
            if layer.b.shape[0] != layer.W.shape[0]:
                raise DimensionError(f"layer {k}: bias has {layer.b.shape[0]} entries for {layer.W.shape[0]} outputs")
            if k > 0 and layer.W.shape[1] != self.layers[k - 1].W.shape[0]:
                previous = self.layers[k - 1].W.shape[0]
                raise DimensionError(f"layer {k} expects {layer.W.shape[1]} inputs, previous layer gives {previous}")

    @property
    def widths(self) -> List[int]:
        return [self.layers[0].W.shape[1]] + [layer.W.shape[0] for layer in self.layers]

    @property
    def n_in(self) -> int:
        return self.layers[0].W.shape[1]

    @property
    def n_out(self) -> int:
        return self.layers[-1].W.shape[0]

    @property
    def size(self) -> int:
        return sum(layer.W.size + layer.b.size for layer in self.layers)

    def flatten(self) -> np.ndarray:
        return np.concatenate([np.concatenate([layer.W.ravel(), layer.b]) for layer in self.layers])

    def with_flat(self, theta: np.ndarray) -> "MlpParams":
        """A copy holding the parameters of the flat vector `theta` (same ordering as `flatten`)."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.size,):
            raise DimensionError(f"expected {self.size} parameters, got shape {theta.shape}")
        layers, offset = [], 0
        for layer in self.layers:
            n_w = layer.W.size
            W = theta[offset : offset + n_w].reshape(layer.W.shape)
            offset += n_w
            b = theta[offset : offset + layer.b.size]
            offset += layer.b.size
            layers.append(MlpLayer(W.copy(), b.copy()))
        return MlpParams(layers, self.activation)

    def copy(self) -> "MlpParams":
        return self.with_flat(self.flatten())


def init_mlp(widths: Sequence[int], rng: np.random.Generator) -> MlpParams:
    """Weights and biases uniform in `+-1/sqrt(fan_in)`."""
    widths = list(widths)
    if len(widths) < 2 or min(widths) < 1:
        raise DimensionError(f"widths must list at least an input and an output size, got {widths}")
    layers = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = 1.0 / np.sqrt(fan_in)
        layers.append(MlpLayer(rng.uniform(-limit, limit, (fan_out, fan_in)), rng.uniform(-limit, limit, fan_out)))
    return MlpParams(layers)


def zeros_like(params: MlpParams) -> MlpParams:
    return params.with_flat(np.zeros(params.size))


def _as_points(params: MlpParams, x) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != params.n_in:
        raise DimensionError(f"network expects {params.n_in} inputs, got shape {x.shape}")
    return x, single


def _hidden_states(params: MlpParams, x: np.ndarray) -> List[np.ndarray]:
    """`[z_0, ..., z_L]` for a batch."""
    states = [x]
    for layer in params.layers[:-1]:
        states.append(np.tanh(states[-1] @ layer.W.T + layer.b))
    return states


def mlp_forward(params: MlpParams, x) -> np.ndarray:
    """Network output, shape (N, n_out), or (n_out,) for a single point.

    >>> layer = MlpLayer(np.array([[2.0, 0.0], [0.0, 3.0]]), np.array([1.0, -1.0]))
    >>> mlp_forward(MlpParams([layer]), np.array([1.0, 1.0])).tolist()
    [3.0, 2.0]
    """
    x, single = _as_points(params, x)
    last = params.layers[-1]
    out = _hidden_states(params, x)[-1] @ last.W.T + last.b
    return out[0] if single else out


def _forward_tangents(params: MlpParams, x: np.ndarray):
    """Hidden states `z_k`, tangents `T_k = dz_k/dx` and pre-tangents `P_k = W_k T_{k-1}`."""
    states = _hidden_states(params, x)
    count = x.shape[0]
    tangents = [np.broadcast_to(np.eye(params.n_in), (count, params.n_in, params.n_in))]
    pre = []
    for k, layer in enumerate(params.layers[:-1], start=1):
        P = np.einsum("wv,nvi->nwi", layer.W, tangents[-1])
        pre.append(P)
        tangents.append((1.0 - states[k] ** 2)[:, :, None] * P)
    return states, tangents, pre


def mlp_input_jacobian(params: MlpParams, x) -> np.ndarray:
    """dN/dx, shape (N, n_out, n_in), or (n_out, n_in) for a single point."""
    x, single = _as_points(params, x)
    _, tangents, _ = _forward_tangents(params, x)
    jac = np.einsum("ow,nwi->noi", params.layers[-1].W, tangents[-1])
    return jac[0] if single else jac


def mlp_param_gradient(params: MlpParams, x, seed) -> np.ndarray:
    """Flat gradient of `sum_i <seed_i, N(x_i)>` with respect to every parameter."""
    x, _ = _as_points(params, x)
    seed = np.atleast_2d(np.asarray(seed, dtype=float))
    if seed.shape != (x.shape[0], params.n_out):
        raise DimensionError(f"seed must have shape {(x.shape[0], params.n_out)}, got {seed.shape}")
    states = _hidden_states(params, x)
    grads = []
    adjoint = seed
    for k in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[k]
        if k < len(params.layers) - 1:
            adjoint = adjoint * (1.0 - states[k + 1] ** 2)
        grads.append((adjoint.T @ states[k], adjoint.sum(axis=0)))
        adjoint = adjoint @ layer.W
    return _flatten_grads(grads[::-1])


def mlp_jacobian_param_gradient(params: MlpParams, x, S) -> np.ndarray:
    """Flat gradient of `sum_i <S_i, dN/dx(x_i)>_F` with respect to every parameter, S of shape (N, n_out, n_in)."""
    x, _ = _as_points(params, x)
    S = np.asarray(S, dtype=float)
    if S.ndim == 2:
        S = S[None]
    if S.shape != (x.shape[0], params.n_out, params.n_in):
        raise DimensionError(f"S must have shape {(x.shape[0], params.n_out, params.n_in)}, got {S.shape}")
    states, tangents, pre = _forward_tangents(params, x)
    L = len(params.layers) - 1
    last = params.layers[-1]

    grads = [None] * (L + 1)
    grads[L] = (np.einsum("noi,nwi->ow", S, tangents[L]), np.zeros_like(last.b))
    G = np.einsum("ow,noi->nwi", last.W, S)  # adjoint of T_L
    zbar = np.zeros_like(states[L])  # adjoint of z_L
    for k in range(L, 0, -1):
        layer = params.layers[k - 1]
        d = 1.0 - states[k] ** 2
        Pbar = d[:, :, None] * G
        dbar = np.sum(G * pre[k - 1], axis=-1)
        abar = (zbar - 2.0 * states[k] * dbar) * d
        gW = abar.T @ states[k - 1] + np.einsum("nwi,nvi->wv", Pbar, tangents[k - 1])
        grads[k - 1] = (gW, abar.sum(axis=0))
        zbar = abar @ layer.W
        G = np.einsum("wv,nwi->nvi", layer.W, Pbar)
    return _flatten_grads(grads)


def _flatten_grads(grads: List[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    return np.concatenate([np.concatenate([gW.ravel(), gb]) for gW, gb in grads])
