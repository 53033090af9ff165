"""Functional descriptors with closed-form proximal maps.

Four convex families cover the data terms and regularizers used by the
solvers:

* ``SquaredDistance(b)``   -- f(y) = ||y - b||^2          (no 1/2 factor)
* ``SquaredNorm(alpha)``   -- g(x) = alpha * ||x||^2
* ``GroupL1(alpha, size)`` -- f(y) = alpha * sum_g ||y_g||_2
* ``Zero()``               -- g(x) = 0

Norms are taken over the real view of the input (a complex sample
contributes its real and imaginary parts), matching the inner product
used by :mod:`spdhg.linops`. ``GroupL1`` groups consecutive entries of
that real view; a complex array therefore needs an even group size. The
isotropic-TV use case is a (rows, cols, 2) gradient field with
``group_size=4``: the two difference channels and both complex
components of one pixel form a group.

``prox_primal`` handles the families with a closed-form primal prox
(``SquaredNorm``, ``Zero``); data terms without one (``SquaredDistance``,
``GroupL1``) are meant to be dualized and are served by ``prox_dual``,
which applies the prox of the convex conjugate.
"""

import dataclasses

import numpy as np

from . import backend

__all__ = [
    "Functional",
    "SquaredDistance",
    "SquaredNorm",
    "GroupL1",
    "Zero",
    "prox_primal",
    "prox_dual",
    "value",
    "conjugate_value",
]

# Boundary slack for indicator-type conjugates: floating-point
# projections land on the constraint boundary.
_DOMAIN_RTOL = 1e-9


class Functional:
    """Marker base class for the descriptor families."""


@dataclasses.dataclass(frozen=True)
class SquaredDistance(Functional):
    """f(y) = ||y - b||^2 with conjugate f*(z) = ||z||^2/4 + <b, z>."""

    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.complex128))


@dataclasses.dataclass(frozen=True)
class SquaredNorm(Functional):
    """g(x) = alpha * ||x||^2 for alpha >= 0."""

    alpha: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"squared_norm: alpha must be >= 0, got {self.alpha}")


@dataclasses.dataclass(frozen=True)
class GroupL1(Functional):
    """f(y) = alpha * sum over groups of the Euclidean group norm.

    Groups are consecutive runs of ``group_size`` entries of the real
    view of the input; the total real length must be divisible by
    ``group_size``.
    """

    alpha: float
    group_size: int

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"group_l1: alpha must be >= 0, got {self.alpha}")
        if self.group_size < 1:
            raise ValueError(f"group_l1: group_size must be >= 1, got {self.group_size}")


@dataclasses.dataclass(frozen=True)
class Zero(Functional):
    """g(x) = 0; its conjugate is the indicator of the origin."""


def _real_flat(v):
    """Real view of an array: floats pass through, complex interleaves."""
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return np.ascontiguousarray(v, dtype=np.complex128).ravel().view(np.float64)
    return np.ascontiguousarray(v, dtype=np.float64).ravel()


def _like(flat, template):
    if np.iscomplexobj(template):
        return np.ascontiguousarray(flat).view(np.complex128).reshape(np.shape(template))
    return flat.reshape(np.shape(template))


def _group_view(fn, v):
    flat = _real_flat(v)
    if flat.size % fn.group_size != 0:
        raise ValueError(
            f"group_l1: real length {flat.size} not divisible by "
            f"group size {fn.group_size}")
    return flat


def prox_primal(fn, tau, v):
    """Exact minimizer of ``||v - x||^2 / 2 + tau * fn(x)``.

    Only the families with a closed-form primal prox are accepted;
    nonsmooth data terms must be dualized instead (append them as a dual
    block and use :func:`prox_dual`).
    """
    if tau <= 0:
        raise ValueError(f"prox_primal: step must be positive, got {tau}")
    v = np.asarray(v)
    if isinstance(fn, Zero):
        return v.copy()
    if isinstance(fn, SquaredNorm):
        return v / (1.0 + 2.0 * tau * fn.alpha)
    raise ValueError(
        f"prox_primal: no closed form for {type(fn).__name__}; dualize the "
        "term (treat it as a dual block with prox_dual)")


def prox_dual(fn, sigma, v):
    """Prox of the convex conjugate: minimizer of ``||v - z||^2/2 + sigma * fn*(z)``."""
    if sigma <= 0:
        raise ValueError(f"prox_dual: step must be positive, got {sigma}")
    v = np.asarray(v)
    if isinstance(fn, SquaredDistance):
        return backend.sqdist_dual_prox(v, fn.b, float(sigma))
    if isinstance(fn, GroupL1):
        flat = _group_view(fn, v)
        projected = backend.group_project(flat, float(fn.alpha), fn.group_size)
        return _like(projected, v)
    raise ValueError(
        f"prox_dual: {type(fn).__name__} is a primal-side family; use prox_primal")


def value(fn, v):
    """Evaluate the functional at ``v`` (may return ``inf``)."""
    v = np.asarray(v)
    if isinstance(fn, Zero):
        return 0.0
    if isinstance(fn, SquaredNorm):
        return fn.alpha * float(np.linalg.norm(v) ** 2)
    if isinstance(fn, SquaredDistance):
        return float(np.linalg.norm(v - fn.b) ** 2)
    if isinstance(fn, GroupL1):
        flat = _group_view(fn, v)
        return fn.alpha * float(np.sum(backend.group_norms(flat, fn.group_size)))
    raise TypeError(f"unknown functional {type(fn).__name__}")


def conjugate_value(fn, z):
    """Evaluate the convex conjugate at ``z`` (may return ``inf``)."""
    z = np.asarray(z)
    if isinstance(fn, SquaredDistance):
        from .linops import real_inner
        return 0.25 * float(np.linalg.norm(z) ** 2) + real_inner(z, fn.b)
    if isinstance(fn, GroupL1):
        flat = _group_view(fn, z)
        norms = backend.group_norms(flat, fn.group_size)
        if np.all(norms <= fn.alpha * (1.0 + _DOMAIN_RTOL)):
            return 0.0
        return np.inf
    if isinstance(fn, Zero):
        if float(np.max(np.abs(z), initial=0.0)) <= _DOMAIN_RTOL:
            return 0.0
        return np.inf
    if isinstance(fn, SquaredNorm):
        # alpha = 0 degenerates to the zero functional.
        if fn.alpha == 0:
            return conjugate_value(Zero(), z)
        return float(np.linalg.norm(z) ** 2) / (4.0 * fn.alpha)
    raise TypeError(f"unknown functional {type(fn).__name__}")
