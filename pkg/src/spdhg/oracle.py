"""Brute-force reference implementations for small instances.

Operators are materialized as dense real matrices over the interleaved
(re, im) view of their complex domain, giving exact norms via SVD and a
direct normal-equations solve of the quadratic model. Sizes are guarded;
these are oracles for testing, not production paths.
"""

import numpy as np

from . import linops, prox, solvers, theory

__all__ = ["materialize", "exact_norm", "solve_quadratic", "SIZE_GUARD"]

SIZE_GUARD = 1_000_000  # max entries of the materialized real matrix


def materialize(op):
    """Dense real matrix of an operator: column j is the image of the
    j-th real basis vector of the domain. The adjoint materializes to
    the transpose.
    """
    rows = 2 * op.codomain_size
    cols = 2 * op.domain_size
    if rows * cols > SIZE_GUARD:
        raise ValueError(
            f"materialize: {rows} x {cols} exceeds the {SIZE_GUARD}-entry guard")
    mat = np.empty((rows, cols))
    basis = np.zeros(cols)
    for j in range(cols):
        basis[j] = 1.0
        x = linops.from_real_vector(basis, op.domain_shape)
        mat[:, j] = linops.as_real_vector(op.apply(x))
        basis[j] = 0.0
    return mat


def exact_norm(op):
    """Largest singular value of the materialized operator."""
    return float(np.linalg.norm(materialize(op), 2))


def solve_quadratic(problem, steps=None):
    """Direct saddle point of the quadratic model.

    Requires every data term to be a squared distance and the
    regularizer to be a squared norm (or zero). Solves the dense normal
    equations

        (sum_i A_i^T A_i + alpha I) x_hat = sum_i A_i^T b_i

    over the real view, sets ``y_hat_i = 2 (A_i x_hat - b_i)``, and
    verifies the pair is a common fixed point of every T_j before
    returning it.
    """
    if isinstance(problem.g, prox.SquaredNorm):
        alpha = problem.g.alpha
    elif isinstance(problem.g, prox.Zero):
        alpha = 0.0
    else:
        raise ValueError(
            f"solve_quadratic: regularizer {type(problem.g).__name__} is not "
            "quadratic")
    for fn in problem.functionals:
        if not isinstance(fn, prox.SquaredDistance):
            raise ValueError(
                f"solve_quadratic: data term {type(fn).__name__} is not a "
                "squared distance")

    dim = 2 * int(np.prod(problem.domain_shape))
    normal = alpha * np.eye(dim)
    rhs = np.zeros(dim)
    for op, fn in zip(problem.operators, problem.functionals):
        mat = materialize(op)
        normal += mat.T @ mat
        rhs += mat.T @ linops.as_real_vector(fn.b)
    try:
        np.linalg.cholesky(normal)
    except np.linalg.LinAlgError:
        raise ValueError(
            "solve_quadratic: singular normal equations (rank-deficient "
            "operator stack with alpha = 0); use alpha > 0") from None
    x_hat = linops.from_real_vector(np.linalg.solve(normal, rhs),
                                    problem.domain_shape)
    y_hat = tuple(2.0 * (op.apply(x_hat) - fn.b)
                  for op, fn in zip(problem.operators, problem.functionals))

    if steps is None:
        solvers.estimate_problem_norms(problem)
        steps = solvers.compute_step_sizes(problem, 1.0, "spdhg")
    resid = theory.saddle_residual(problem, steps, (x_hat, y_hat))
    if resid >= 1e-8:
        raise RuntimeError(
            f"solve_quadratic: solution fails the fixed-point check "
            f"(residual {resid:.3e}); conventions are inconsistent")
    return x_hat, y_hat
