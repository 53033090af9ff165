"""Numerical convergence diagnostics for the primal-dual iteration.

Implements the quadratic forms V and V^k that majorize the iterates'
distance to a saddle point, the exact (branch-enumerated) conditional
expectation of the next V^k, the per-block fixed-point operators T_j
whose common fixed points are exactly the saddle points, and the Bregman
gap. Everything here is evaluated in the weighted geometry

    ||x||^2_{1/tau}        = <x, x> / tau
    ||y||^2_{Q S^{-1}}     = sum_i <y_i, y_i> / (p_i sigma_i)
    <Q A x, y>             = sum_i <A_i x, y_i> / p_i

with the real inner product of :mod:`spdhg.linops`.
"""

import dataclasses

import numpy as np

from . import prox
from .linops import real_inner

__all__ = [
    "TheoryWeights",
    "v_value",
    "vk_value",
    "expected_next_delta",
    "apply_T",
    "saddle_residual",
    "bregman_gap",
]

# A claimed saddle point with a worse T_j fixed-point residual than this
# is rejected by expected_next_delta.
SADDLE_RESIDUAL_TOL = 1e-6


@dataclasses.dataclass(frozen=True)
class TheoryWeights:
    """Diagonal weights for the primal-dual quadratic forms."""

    tau: float
    sigma: tuple
    probabilities: tuple

    @classmethod
    def from_steps(cls, steps, problem):
        return cls(tau=steps.tau, sigma=tuple(steps.sigma),
                   probabilities=tuple(problem.probabilities))

    def primal_norm_sq(self, x):
        return real_inner(x, x) / self.tau

    def dual_norm_sq(self, y):
        return sum(real_inner(y_i, y_i) / (p * s)
                   for y_i, p, s in zip(y, self.probabilities, self.sigma))

    def cross(self, problem, x, y):
        """<Q A x, y> = sum_i <A_i x, y_i> / p_i."""
        return sum(real_inner(op.apply(x), y_i) / p
                   for op, y_i, p in zip(problem.operators, y,
                                         self.probabilities))


def v_value(x, y, problem, weights):
    """V(x, y) = ||x||^2_{1/tau} + 2 <QAx, y> + ||y||^2_{QS^{-1}}.

    Typically evaluated at difference vectors. Under the step-size
    condition with contraction factor gamma_c, pairs whose dual part is
    supported on a single block satisfy
    ``V(x, y) >= (1 - gamma_c) (||x||^2_{1/tau} + ||y||^2_{QS^{-1}})``.
    """
    return (weights.primal_norm_sq(x)
            + 2.0 * weights.cross(problem, x, y)
            + weights.dual_norm_sq(y))


def vk_value(x, y, state, problem, weights):
    """V^k(x, y), the history-dependent companion of V.

    Uses the dual increment ``y^k - y^{k-1}`` carried by the state:

        V^k(x, y) = ||x||^2_{1/tau} - 2 <QAx, y^k - y^{k-1}>
                    + ||y^k - y^{k-1}||^2_{QS^{-1}} + ||y||^2_{QS^{-1}}.

    The distance functional Delta^k is V^k evaluated at w^k - w_hat.
    """
    dy = [cur - prev for cur, prev in zip(state.y, state.y_prev)]
    return (weights.primal_norm_sq(x)
            - 2.0 * weights.cross(problem, x, dy)
            + weights.dual_norm_sq(dy)
            + weights.dual_norm_sq(y))


def apply_T(problem, steps, j, w):
    """The block-j fixed-point operator T_j on a primal-dual pair.

    The dual coordinate j moves first through its prox; the primal
    coordinate then takes a prox step against A^T y plus a
    (1 + 1/p_j)-weighted correction along the block-j dual movement:

        (T_j w)_j = prox_{sigma_j f_j*}(y_j + sigma_j A_j x)
        (T_j w)_0 = prox_{tau g}(x - tau A^T y
                                 - (1 + 1/p_j) tau A_j^T((T_j w)_j - y_j))

    Other dual coordinates are copied. A pair is a saddle point iff it is
    a fixed point of every T_j, and consecutive solver iterates satisfy
    ``T_{j^k}(x^{k+1}, y^k) = (x^{k+2}, y^{k+1})``.
    """
    x, y = w
    op = problem.operators[j]
    y_j = prox.prox_dual(problem.functionals[j], steps.sigma[j],
                         y[j] + steps.sigma[j] * op.apply(x))
    at_y = np.zeros(problem.domain_shape, dtype=np.complex128)
    for op_i, y_i in zip(problem.operators, y):
        at_y += op_i.adjoint(y_i)
    correction = (1.0 + 1.0 / problem.probabilities[j]) * op.adjoint(y_j - y[j])
    x_new = prox.prox_primal(problem.g, steps.tau,
                             x - steps.tau * (at_y + correction))
    y_new = tuple(y[:j]) + (y_j,) + tuple(y[j + 1:])
    return x_new, y_new


def saddle_residual(problem, steps, w):
    """max_j || T_j(w) - w || in the plain Euclidean product norm."""
    x, y = w
    worst = 0.0
    for j in range(problem.n_blocks):
        x_new, y_new = apply_T(problem, steps, j, w)
        sq = np.linalg.norm(x_new - x) ** 2
        sq += sum(np.linalg.norm(a - b) ** 2 for a, b in zip(y_new, y))
        worst = max(worst, np.sqrt(sq))
    return float(worst)


def expected_next_delta(problem, state, steps, saddle):
    """Both sides of the one-step descent inequality, exactly.

    With Delta^k = V^k(w^k - w_hat), returns ``(lhs, rhs)`` where

        lhs = Delta^k
        rhs = E^{k+1}[ Delta^{k+1} ] + V(x^{k+1} - x^k, y^k - y^{k-1})

    and the conditional expectation is computed by enumerating all n
    outcomes of the block draw (weighted by p_j), so there is no sampling
    error: the descent property is ``lhs >= rhs`` up to rounding. The
    primal update x^{k+1} is deterministic given the state.
    """
    x_hat, y_hat = saddle
    resid = saddle_residual(problem, steps, (x_hat, y_hat))
    if resid > SADDLE_RESIDUAL_TOL:
        raise ValueError(
            f"saddle input fails the fixed-point test (residual {resid:.3e})")
    weights = TheoryWeights.from_steps(steps, problem)

    lhs = vk_value(state.x - x_hat,
                   [a - b for a, b in zip(state.y, y_hat)],
                   state, problem, weights)

    x_next = prox.prox_primal(problem.g, steps.tau,
                              state.x - steps.tau * state.zbar)
    expectation = 0.0
    for j in range(problem.n_blocks):
        op = problem.operators[j]
        y_j = prox.prox_dual(problem.functionals[j], steps.sigma[j],
                             state.y[j] + steps.sigma[j] * op.apply(x_next))
        dy = [np.zeros_like(y_i) for y_i in state.y]
        dy[j] = y_j - state.y[j]
        diff_y = list(state.y)
        diff_y[j] = y_j
        diff_to_hat = [a - b for a, b in zip(diff_y, y_hat)]
        # V^{k+1} for this branch, written out with the branch increment.
        branch = (weights.primal_norm_sq(x_next - x_hat)
                  - 2.0 * weights.cross(problem, x_next - x_hat, dy)
                  + weights.dual_norm_sq(dy)
                  + weights.dual_norm_sq(diff_to_hat))
        expectation += problem.probabilities[j] * branch

    dy_prev = [cur - prev for cur, prev in zip(state.y, state.y_prev)]
    rhs = expectation + v_value(x_next - state.x, dy_prev, problem, weights)
    return lhs, rhs


def bregman_gap(problem, x, y, x_hat, y_hat):
    """D_g^{-A^T y_hat}(x, x_hat) + sum_i D_{f_i*}^{A_i x_hat}(y_i, y_hat_i).

    Bregman distances of convex functionals, hence nonnegative whenever
    the subgradient memberships hold (they do for saddle points); exactly
    zero at ``(x_hat, y_hat)``. Points outside the conjugate domain give
    ``inf``.
    """
    at_y_hat = np.zeros(problem.domain_shape, dtype=np.complex128)
    for op, y_hat_i in zip(problem.operators, y_hat):
        at_y_hat += op.adjoint(y_hat_i)
    gap = (prox.value(problem.g, x) - prox.value(problem.g, x_hat)
           + real_inner(x - x_hat, at_y_hat))
    for op, fn, y_i, y_hat_i in zip(problem.operators, problem.functionals,
                                    y, y_hat):
        f_star_y = prox.conjugate_value(fn, y_i)
        if np.isinf(f_star_y):
            return np.inf
        gap += (f_star_y - prox.conjugate_value(fn, y_hat_i)
                - real_inner(y_i - y_hat_i, op.apply(x_hat)))
    return float(gap)
