"""Pure-numpy implementations of the hot inner-loop kernels.

These are the fallback used when the compiled extension ``spdhg._kernels``
is unavailable. Both backends implement the same contract and are checked
against each other in the test suite; see ``spdhg.backend`` for selection.
"""

import numpy as np

BACKEND_NAME = "python"


def gradient_forward(x):
    """2-D forward differences with Neumann boundary.

    Input is a (rows, cols) complex array; output has shape
    (rows, cols, 2) with channel 0 holding row differences and channel 1
    column differences. The difference at the last row/column is zero.
    """
    r, c = x.shape
    out = np.zeros((r, c, 2), dtype=np.complex128)
    out[: r - 1, :, 0] = x[1:, :] - x[: r - 1, :]
    out[:, : c - 1, 1] = x[:, 1:] - x[:, : c - 1]
    return out


def gradient_adjoint(y):
    """Adjoint of :func:`gradient_forward` (negative divergence)."""
    r, c = y.shape[0], y.shape[1]
    out = np.zeros((r, c), dtype=np.complex128)
    d0 = y[:, :, 0]
    d1 = y[:, :, 1]
    out[1:, :] += d0[: r - 1, :]
    out[: r - 1, :] -= d0[: r - 1, :]
    out[:, 1:] += d1[:, : c - 1]
    out[:, : c - 1] -= d1[:, : c - 1]
    return out


def group_project(v, radius, group_size):
    """Project each consecutive group of ``group_size`` reals onto the
    Euclidean ball of the given radius.

    ``v`` is a 1-D float64 array whose length is a multiple of
    ``group_size``. Groups with norm <= radius pass through unchanged.
    """
    groups = v.reshape(-1, group_size)
    norms = np.sqrt(np.einsum("ij,ij->i", groups, groups))
    scale = np.ones_like(norms)
    over = norms > radius
    scale[over] = radius / norms[over]
    return (groups * scale[:, None]).ravel()


def group_norms(v, group_size):
    """Euclidean norm of each consecutive group of ``group_size`` reals."""
    groups = v.reshape(-1, group_size)
    return np.sqrt(np.einsum("ij,ij->i", groups, groups))


def sqdist_dual_prox(v, b, sigma):
    """Resolvent of the conjugate of ``y -> ||y - b||^2``: (v - sigma*b) / (1 + sigma/2)."""
    return (v - sigma * b) / (1.0 + 0.5 * sigma)
