# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Chebyshev collocation on the Gauss-Lobatto nodes `xi_j = cos(j pi / N)`, j = 0..N."""
from typing import Tuple

import numpy as np
from scipy.linalg import toeplitz

from qrnet.utils import DimensionError


def chebyshev_nodes(N: int) -> np.ndarray:
    """Nodes ordered from +1 down to -1, computed with the symmetric sine form.

    >>> chebyshev_nodes(2).round(12).tolist()
    [1.0, 0.0, -1.0]
    """
    if N < 1:
        raise DimensionError(f"need at least two nodes, got N={N}")
    return np.sin(np.pi * np.arange(N, -N - 1, -2) / (2.0 * N))


def chebyshev_diff_matrix(N: int) -> Tuple[np.ndarray, np.ndarray]:
    """First-derivative matrix on N + 1 Chebyshev points and the nodes themselves.

    Off-diagonal entries use trigonometric differences `x_k - x_j = 2 sin((t_k + t_j)/2) sin((t_j - t_k)/2)`
    with the flipping trick; the diagonal is the negative row sum, so constants differentiate to zero exactly.
    """
    if N < 2:
        raise DimensionError(f"chebyshev_diff_matrix needs N >= 2, got {N}")
    size = N + 1
    x = chebyshev_nodes(N)
    theta = np.arange(size)[:, None] * np.pi / N
    half = np.tile(theta / 2.0, size)
    dx = 2.0 * np.sin(half.T + half) * np.sin(half.T - half)
    n1, n2 = size // 2, -(-size // 2)
    dx[n1:, :] = -np.flipud(np.fliplr(dx[:n2, :]))
    np.fill_diagonal(dx, 1.0)
    z = 1.0 / dx
    np.fill_diagonal(z, 0.0)

    c = toeplitz((-1.0) ** np.arange(size))
    c[0, :] *= 2.0
    c[-1, :] *= 2.0
    c[:, 0] /= 2.0
    c[:, -1] /= 2.0

    D = z * (c - np.eye(size))
    np.fill_diagonal(D, -D.sum(axis=1))
    return D, x


def interior(M: np.ndarray) -> np.ndarray:
    """Restriction to interior nodes, i.e. homogeneous Dirichlet data at xi = +-1."""
    return M[1:-1, 1:-1]


def clenshaw_curtis_weights(N: int) -> np.ndarray:
    """Quadrature weights for the N + 1 Chebyshev nodes; they integrate polynomials of degree N exactly.

    >>> float(clenshaw_curtis_weights(4).sum().round(12))
    2.0
    """
    if N < 1:
        raise DimensionError(f"need N >= 1, got {N}")
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    inner = np.arange(1, N)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k**2 - 1)
        v -= np.cos(N * theta[inner]) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k**2 - 1)
    w[inner] = 2.0 * v / N
    return w
