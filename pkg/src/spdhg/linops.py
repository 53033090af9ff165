"""Linear operators between complex grid arrays.

All operators act on complex128 ndarrays and are linear over the reals:
the working inner product is ``<u, v> = Re(sum(u * conj(v)))``, which
identifies a complex array of d samples with a real vector of length 2d.
Adjoints are taken with respect to this inner product; for a
complex-linear map that coincides with the conjugate transpose.

Operators are immutable after construction. ``estimate_norm`` performs a
one-time cache write of the norm bound, which is idempotent.
"""

import warnings

import numpy as np

from . import backend

__all__ = [
    "LinearOperator",
    "ScaledIdentity",
    "Dft2",
    "Mask",
    "CoilMultiply",
    "Gradient",
    "Compose",
    "BlockRow",
    "real_inner",
    "as_real_vector",
    "from_real_vector",
    "estimate_norm",
]


def real_inner(u, v):
    """Real inner product ``Re(sum(u * conj(v)))`` of two arrays."""
    return float(np.real(np.vdot(v, u)))


def as_real_vector(x):
    """Flatten a complex array into interleaved (re, im) float64 pairs."""
    x = np.ascontiguousarray(x, dtype=np.complex128)
    return x.ravel().view(np.float64).copy()


def from_real_vector(v, shape):
    """Inverse of :func:`as_real_vector` for the given complex shape."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    return v.view(np.complex128).reshape(shape).copy()


def _as_complex(x, shape, what):
    arr = np.asarray(x, dtype=np.complex128)
    if arr.shape != tuple(shape):
        raise ValueError(f"{what}: expected shape {tuple(shape)}, got {arr.shape}")
    return arr


class LinearOperator:
    """Base class: a real-linear map between complex arrays.

    Attributes
    ----------
    domain_shape, codomain_shape : tuple of int
        Shapes of admissible input and output arrays.
    norm_bound : float or None
        Cached upper bound on the operator norm, set by
        :func:`estimate_norm`. ``None`` until estimated.
    """

    kind = "abstract"

    def __init__(self, domain_shape, codomain_shape):
        self.domain_shape = tuple(int(s) for s in domain_shape)
        self.codomain_shape = tuple(int(s) for s in codomain_shape)
        self.norm_bound = None

    @property
    def domain_size(self):
        return int(np.prod(self.domain_shape))

    @property
    def codomain_size(self):
        return int(np.prod(self.codomain_shape))

    def apply(self, x):
        x = _as_complex(x, self.domain_shape, f"{self.kind}.apply input")
        return self._apply(x)

    def adjoint(self, y):
        y = _as_complex(y, self.codomain_shape, f"{self.kind}.adjoint input")
        return self._adjoint(y)

    def __call__(self, x):
        return self.apply(x)

    def _apply(self, x):
        raise NotImplementedError

    def _adjoint(self, y):
        raise NotImplementedError

    def __repr__(self):
        return (f"{type(self).__name__}(domain={self.domain_shape}, "
                f"codomain={self.codomain_shape})")


class ScaledIdentity(LinearOperator):
    """``x -> scale * x`` on a fixed shape; adjoint multiplies by conj(scale)."""

    kind = "scaled_identity"

    def __init__(self, shape, scale=1.0):
        super().__init__(shape, shape)
        self.scale = complex(scale)

    def _apply(self, x):
        return self.scale * x

    def _adjoint(self, y):
        return np.conj(self.scale) * y


class Dft2(LinearOperator):
    """Orthonormal 2-D discrete Fourier transform (unitary).

    With ``centered=True`` the spectrum is fftshift-centered so that the
    zero frequency sits at index (rows//2, cols//2); the operator stays
    unitary and its adjoint equals its inverse either way.
    """

    kind = "dft2"

    def __init__(self, shape, centered=False):
        if len(shape) != 2:
            raise ValueError(f"dft2 needs a 2-D grid shape, got {shape}")
        super().__init__(shape, shape)
        self.centered = bool(centered)

    def _apply(self, x):
        if self.centered:
            return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(x), norm="ortho"))
        return np.fft.fft2(x, norm="ortho")

    def _adjoint(self, y):
        if self.centered:
            return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(y), norm="ortho"))
        return np.fft.ifft2(y, norm="ortho")


class Mask(LinearOperator):
    """Subsampling: keep the listed raveled indices of the domain.

    The adjoint zero-fills the unselected entries.
    """

    kind = "mask"

    def __init__(self, indices, domain_shape):
        indices = np.array(indices, dtype=np.intp, copy=True).ravel()
        d = int(np.prod(domain_shape))
        if indices.size == 0:
            raise ValueError("mask: empty index set")
        if indices.min() < 0 or indices.max() >= d:
            raise ValueError(
                f"mask: indices must lie in [0, {d}), got range "
                f"[{indices.min()}, {indices.max()}]")
        if np.unique(indices).size != indices.size:
            raise ValueError("mask: duplicate indices")
        super().__init__(domain_shape, (indices.size,))
        self.indices = indices
        self.indices.setflags(write=False)

    def _apply(self, x):
        return x.ravel()[self.indices].copy()

    def _adjoint(self, y):
        out = np.zeros(self.domain_size, dtype=np.complex128)
        out[self.indices] = y
        return out.reshape(self.domain_shape)


class CoilMultiply(LinearOperator):
    """Pointwise multiplication by a fixed complex map; adjoint uses its conjugate."""

    kind = "coil_multiply"

    def __init__(self, coil_map):
        coil_map = np.array(coil_map, dtype=np.complex128, copy=True)
        super().__init__(coil_map.shape, coil_map.shape)
        self.coil_map = coil_map
        self.coil_map.setflags(write=False)
        self._conj_map = np.conj(coil_map)

    def _apply(self, x):
        return self.coil_map * x

    def _adjoint(self, y):
        return self._conj_map * y


class Gradient(LinearOperator):
    """2-D forward differences with Neumann boundary.

    Maps a (rows, cols) array to (rows, cols, 2): channel 0 holds
    differences along rows, channel 1 along columns, zero at the last
    index of each direction. The adjoint is the negative divergence with
    matching boundary handling. Operator norm is below sqrt(8).
    """

    kind = "gradient"

    def __init__(self, shape):
        if len(shape) != 2:
            raise ValueError(f"gradient needs a 2-D grid shape, got {shape}")
        super().__init__(shape, (shape[0], shape[1], 2))

    def _apply(self, x):
        return backend.gradient_forward(np.ascontiguousarray(x))

    def _adjoint(self, y):
        return backend.gradient_adjoint(np.ascontiguousarray(y))


class Compose(LinearOperator):
    """Composition ``ops[0] o ops[1] o ... o ops[-1]``.

    The last operator in the list is applied first, mirroring how the
    composition is written. The adjoint reverses the chain.
    """

    kind = "compose"

    def __init__(self, ops):
        ops = list(ops)
        if not ops:
            raise ValueError("compose: need at least one operator")
        for k in range(len(ops) - 1):
            outer, inner = ops[k], ops[k + 1]
            if outer.domain_shape != inner.codomain_shape:
                raise ValueError(
                    f"compose: stage {k} ({outer.kind}) expects domain "
                    f"{outer.domain_shape} but stage {k + 1} ({inner.kind}) "
                    f"produces {inner.codomain_shape}")
        super().__init__(ops[-1].domain_shape, ops[0].codomain_shape)
        self.ops = tuple(ops)

    def _apply(self, x):
        for op in reversed(self.ops):
            x = op.apply(x)
        return x

    def _adjoint(self, y):
        for op in self.ops:
            y = op.adjoint(y)
        return y


class BlockRow(LinearOperator):
    """Stacked operator ``x -> (A_1 x, ..., A_n x)`` with a flat codomain.

    Block outputs are raveled and concatenated; the adjoint splits its
    input accordingly and sums the block adjoints.
    """

    kind = "block_row"

    def __init__(self, ops):
        ops = list(ops)
        if not ops:
            raise ValueError("block_row: need at least one operator")
        domain = ops[0].domain_shape
        for k, op in enumerate(ops):
            if op.domain_shape != domain:
                raise ValueError(
                    f"block_row: block {k} ({op.kind}) has domain "
                    f"{op.domain_shape}, expected {domain}")
        sizes = [op.codomain_size for op in ops]
        super().__init__(domain, (int(np.sum(sizes)),))
        self.ops = tuple(ops)
        self._offsets = np.concatenate(([0], np.cumsum(sizes)))

    def _apply(self, x):
        return np.concatenate([op.apply(x).ravel() for op in self.ops])

    def _adjoint(self, y):
        out = np.zeros(self.domain_shape, dtype=np.complex128)
        for k, op in enumerate(self.ops):
            part = y[self._offsets[k]:self._offsets[k + 1]]
            out += op.adjoint(part.reshape(op.codomain_shape))
        return out


def estimate_norm(op, max_iters=10000, tol=1e-8, seed=0):
    """Estimate the operator norm by power iteration on ``A^T A``.

    Stops when successive square-rooted Rayleigh quotients agree to a
    relative ``tol``. The returned estimate is also cached on the
    operator as ``norm_bound``, inflated by 1 + 1e-6 so that downstream
    step-size checks stay conservative against estimation error. A zero
    operator yields 0; hitting ``max_iters`` without convergence returns
    the last estimate and emits a warning.
    """
    if max_iters < 1:
        raise ValueError("estimate_norm: max_iters must be >= 1")
    if tol <= 0:
        raise ValueError("estimate_norm: tol must be positive")
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(op.domain_shape) + 1j * rng.standard_normal(op.domain_shape)
    estimate = 0.0
    converged = False
    for _ in range(max_iters):
        v = op.apply(u)
        norm_u = np.linalg.norm(u)
        norm_v = np.linalg.norm(v)
        if norm_v == 0.0:
            estimate = 0.0
            converged = True
            break
        new_estimate = norm_v / norm_u
        if abs(new_estimate - estimate) < tol * max(new_estimate, 1e-300):
            estimate = new_estimate
            converged = True
            break
        estimate = new_estimate
        u = op.adjoint(v)
        u /= np.linalg.norm(u)
    if not converged:
        warnings.warn(
            f"estimate_norm: no convergence within {max_iters} iterations "
            f"(last estimate {estimate:.6g})", RuntimeWarning)
    estimate = float(estimate)
    op.norm_bound = estimate * (1.0 + 1e-6)
    return estimate
