"""PDHG and SPDHG iteration engines.

Both algorithms solve the saddle-point problem

    min_x max_y  sum_i <A_i x, y_i> - f_i*(y_i) + g(x)

whose primal part is ``min_x sum_i f_i(A_i x) + g(x)``. PDHG [CP2011]
updates every dual block per iteration with extrapolation
``ybar^k = 2 y^k - y^{k-1}``; SPDHG [CERS2018] updates one randomly
drawn block per iteration and keeps the running quantities

    z    = A^T y
    zbar = z + p_j^{-1} * A_j^T (y_j^new - y_j^old)

so that the primal step only ever sees ``zbar``. One epoch is one pass
over the data: n SPDHG iterations, or a single PDHG iteration.

References
----------
[CP2011] Chambolle, A. and Pock, T. *A first-order primal-dual algorithm
for convex problems with applications to imaging.* JMIV 40 (2011).

[CERS2018] Chambolle, A., Ehrhardt, M. J., Richtarik, P. and
Schoenlieb, C.-B. *Stochastic primal-dual hybrid gradient algorithm with
arbitrary sampling and imaging applications.* SIOPT 28 (2018).
"""

import dataclasses
import time
from typing import Optional

import numpy as np

from . import linops, prox

__all__ = [
    "SaddleProblem",
    "StepSizes",
    "SolverState",
    "ConvergenceRecord",
    "Target",
    "Violation",
    "DivergenceError",
    "GammaRunResult",
    "estimate_problem_norms",
    "compute_step_sizes",
    "validate_step_sizes",
    "init_state",
    "spdhg_step",
    "pdhg_step",
    "run",
    "gamma_search",
]

DIVERGENCE_FACTOR = 1e12


class DivergenceError(RuntimeError):
    """Raised when the objective blows past the divergence guard."""

    def __init__(self, gamma, epoch, objective):
        super().__init__(
            f"run diverged at gamma={gamma:g}, epoch {epoch:g} "
            f"(objective {objective:.3e})")
        self.gamma = gamma
        self.epoch = epoch
        self.objective = objective


@dataclasses.dataclass
class SaddleProblem:
    """A saddle-point instance: dual blocks (A_i, f_i), regularizer g,
    and sampling probabilities.

    ``block_norms`` caches (inflated) bounds on each ||A_i|| and
    ``full_norm`` a bound on the stacked ||A||; populate them with
    :func:`estimate_problem_norms` or supply exact values directly.
    """

    operators: tuple
    functionals: tuple
    g: prox.Functional
    probabilities: tuple
    block_norms: Optional[tuple] = None
    full_norm: Optional[float] = None

    def __post_init__(self):
        self.operators = tuple(self.operators)
        self.functionals = tuple(self.functionals)
        self.probabilities = tuple(float(p) for p in self.probabilities)
        if self.block_norms is not None:
            self.block_norms = tuple(float(v) for v in self.block_norms)
        if len(self.operators) == 0:
            raise ValueError("problem needs at least one dual block")
        if len(self.functionals) != len(self.operators):
            raise ValueError("one functional per operator required")
        if len(self.probabilities) != len(self.operators):
            raise ValueError("one probability per block required")
        if any(p <= 0 for p in self.probabilities):
            raise ValueError("all sampling probabilities must be positive")
        if abs(sum(self.probabilities) - 1.0) > 1e-12:
            raise ValueError("sampling probabilities must sum to 1")
        domain = self.operators[0].domain_shape
        for k, op in enumerate(self.operators):
            if op.domain_shape != domain:
                raise ValueError(
                    f"block {k} has domain {op.domain_shape}, expected {domain}")

    @property
    def n_blocks(self):
        return len(self.operators)

    @property
    def domain_shape(self):
        return self.operators[0].domain_shape

    def objective(self, x):
        """Phi(x) = sum_i f_i(A_i x) + g(x)."""
        total = prox.value(self.g, x)
        for op, fn in zip(self.operators, self.functionals):
            total += prox.value(fn, op.apply(x))
        return total


def estimate_problem_norms(problem, max_iters=10000, tol=1e-8, seed=0):
    """Fill in ``block_norms`` and ``full_norm`` by power iteration.

    Estimates are inflated by 1 + 1e-6 (see :func:`linops.estimate_norm`)
    so the step-size condition is checked conservatively. Idempotent:
    existing values are kept.
    """
    if problem.block_norms is None:
        problem.block_norms = tuple(
            linops.estimate_norm(op, max_iters=max_iters, tol=tol, seed=seed)
            * (1.0 + 1e-6)
            for op in problem.operators)
    if problem.full_norm is None:
        stacked = linops.BlockRow(problem.operators)
        problem.full_norm = linops.estimate_norm(
            stacked, max_iters=max_iters, tol=tol, seed=seed) * (1.0 + 1e-6)
    return problem


@dataclasses.dataclass(frozen=True)
class StepSizes:
    """Primal/dual step sizes plus the contraction factor they induce.

    ``contraction`` is ``sqrt(max_i p_i^{-1} tau sigma_i ||A_i||^2)`` for
    SPDHG and ``sqrt(tau sigma ||A||^2)`` for PDHG; both must stay
    below 1.
    """

    tau: float
    sigma: tuple
    gamma: float
    contraction: float
    algorithm: str


@dataclasses.dataclass(frozen=True)
class Violation:
    block: int
    lhs: float
    bound: float

    def __str__(self):
        name = "stacked" if self.block < 0 else f"block {self.block}"
        return f"{name}: tau*sigma*||A||^2 = {self.lhs:.6g} >= {self.bound:.6g}"


def compute_step_sizes(problem, gamma, algorithm):
    """Step sizes from the gamma-parametrized rules.

    SPDHG: ``sigma_i = gamma * p_i / ||A_i||`` and
    ``tau = 0.99 / (gamma * max_i ||A_i||)``, which gives
    ``tau sigma_i ||A_i||^2 / p_i = 0.99 ||A_i|| / max_j ||A_j|| < 1``
    for every block. PDHG treats the stacked operator as a single block:
    ``sigma = gamma / ||A||`` and ``tau = 0.99 / (gamma * ||A||)``.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if algorithm not in ("pdhg", "spdhg"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    gamma = float(gamma)
    if algorithm == "spdhg":
        if problem.block_norms is None:
            raise ValueError("block norms missing; call estimate_problem_norms")
        norms = problem.block_norms
        if any(v == 0 for v in norms):
            raise ValueError("degenerate block with ||A_i|| = 0")
        max_norm = max(norms)
        sigma = tuple(gamma * p / v for p, v in zip(problem.probabilities, norms))
        tau = 0.99 / (gamma * max_norm)
        contraction = np.sqrt(max(
            tau * s * v * v / p
            for s, v, p in zip(sigma, norms, problem.probabilities)))
    else:
        if problem.full_norm is None:
            raise ValueError("stacked norm missing; call estimate_problem_norms")
        full = problem.full_norm
        if full == 0:
            raise ValueError("degenerate problem with ||A|| = 0")
        sig = gamma / full
        sigma = (sig,) * problem.n_blocks
        tau = 0.99 / (gamma * full)
        contraction = np.sqrt(tau * sig * full * full)
    return StepSizes(tau=tau, sigma=sigma, gamma=gamma,
                     contraction=float(contraction), algorithm=algorithm)


def validate_step_sizes(problem, steps):
    """Check the step-size condition; return the list of violations.

    SPDHG requires ``tau sigma_i ||A_i||^2 < p_i`` strictly for every
    block (checked with the cached, inflated norm bounds). PDHG requires
    ``tau sigma ||A||^2 < 1`` for the stacked operator, reported with
    block index -1.
    """
    violations = []
    if steps.algorithm == "pdhg":
        lhs = steps.tau * steps.sigma[0] * problem.full_norm ** 2
        if not lhs < 1.0:
            violations.append(Violation(block=-1, lhs=lhs, bound=1.0))
        return violations
    for i, (s, v, p) in enumerate(
            zip(steps.sigma, problem.block_norms, problem.probabilities)):
        lhs = steps.tau * s * v * v
        if not lhs < p:
            violations.append(Violation(block=i, lhs=lhs, bound=p))
    return violations


@dataclasses.dataclass
class SolverState:
    """Everything one iteration reads: primal x, dual blocks y, the
    running z = A^T y and its extrapolation zbar, the previous dual
    iterate (y^{-1} = y^0 initially), the iteration counter, the last
    drawn block, and the RNG.
    """

    x: np.ndarray
    y: tuple
    z: np.ndarray
    zbar: np.ndarray
    y_prev: tuple
    k: int
    last_block: Optional[int]
    rng: np.random.Generator


def init_state(problem, x0=None, seed=0):
    """Fresh state: y = 0, z = zbar = 0, x0 defaults to the zero image.

    The RNG is numpy's default 64-bit generator (PCG64) seeded as given;
    runs are reproducible for a fixed seed.
    """
    if x0 is None:
        x = np.zeros(problem.domain_shape, dtype=np.complex128)
    else:
        x = np.asarray(x0, dtype=np.complex128).copy()
        if x.shape != problem.domain_shape:
            raise ValueError(
                f"x0 has shape {x.shape}, expected {problem.domain_shape}")
    y = tuple(np.zeros(op.codomain_shape, dtype=np.complex128)
              for op in problem.operators)
    zeros = np.zeros(problem.domain_shape, dtype=np.complex128)
    return SolverState(x=x, y=y, z=zeros, zbar=zeros.copy(), y_prev=y,
                       k=0, last_block=None, rng=np.random.default_rng(seed))


def spdhg_step(problem, state, steps):
    """One SPDHG iteration: draw a block j, primal prox against zbar,
    dual prox on block j only, then update z and zbar with the
    probability-weighted correction. Arrays in the input state are never
    mutated; the returned state shares the untouched dual blocks.
    """
    j = int(state.rng.choice(problem.n_blocks, p=problem.probabilities))
    op = problem.operators[j]
    x_new = prox.prox_primal(problem.g, steps.tau,
                             state.x - steps.tau * state.zbar)
    y_j = prox.prox_dual(problem.functionals[j], steps.sigma[j],
                         state.y[j] + steps.sigma[j] * op.apply(x_new))
    delta = op.adjoint(y_j - state.y[j])
    z_new = state.z + delta
    zbar_new = z_new + delta / problem.probabilities[j]
    y_new = state.y[:j] + (y_j,) + state.y[j + 1:]
    return SolverState(x=x_new, y=y_new, z=z_new, zbar=zbar_new,
                       y_prev=state.y, k=state.k + 1, last_block=j,
                       rng=state.rng)


def pdhg_step(problem, state, steps):
    """One PDHG iteration: primal prox against A^T(2 y^k - y^{k-1})
    (carried by zbar), then a dual prox on every block with the shared
    sigma. With a single block and p_1 = 1 this coincides with
    :func:`spdhg_step` update-for-update.
    """
    x_new = prox.prox_primal(problem.g, steps.tau,
                             state.x - steps.tau * state.zbar)
    y_new = []
    delta = np.zeros(problem.domain_shape, dtype=np.complex128)
    for i, (op, fn) in enumerate(zip(problem.operators, problem.functionals)):
        y_i = prox.prox_dual(fn, steps.sigma[i],
                             state.y[i] + steps.sigma[i] * op.apply(x_new))
        delta += op.adjoint(y_i - state.y[i])
        y_new.append(y_i)
    z_new = state.z + delta
    zbar_new = z_new + delta
    return SolverState(x=x_new, y=tuple(y_new), z=z_new, zbar=zbar_new,
                       y_prev=state.y, k=state.k + 1, last_block=None,
                       rng=state.rng)


@dataclasses.dataclass(frozen=True)
class Target:
    """Reference solution for convergence metrics.

    ``x`` drives the relative objective and the distance column;
    ``saddle = (x_hat, y_hat)``, when available, additionally enables the
    Bregman-gap column (quadratic model only).
    """

    x: np.ndarray
    saddle: Optional[tuple] = None


@dataclasses.dataclass(frozen=True)
class ConvergenceRecord:
    epoch: float
    objective: float
    relative_objective: Optional[float]
    distance_to_target: Optional[float]
    bregman_gap: Optional[float]
    wall_time_s: float
    seed: int
    algorithm: str
    gamma: float


def _is_quadratic(problem):
    return (isinstance(problem.g, (prox.SquaredNorm, prox.Zero))
            and all(isinstance(fn, prox.SquaredDistance)
                    for fn in problem.functionals))


def run(problem, algorithm, steps, epochs, target=None, log_every=1.0,
        seed=0, x0=None):
    """Run a solver for the given number of epochs and log records.

    One epoch is n_blocks SPDHG iterations or one PDHG iteration, so
    epochs count passes over the data for either algorithm. A record is
    logged at epoch 0, every ``log_every`` epochs, and at the end. The
    run aborts with :class:`DivergenceError` if the objective exceeds
    1e12 times its initial value.

    Returns ``(records, final_state)``.
    """
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    if algorithm not in ("pdhg", "spdhg"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    violations = validate_step_sizes(problem, steps)
    if violations:
        raise ValueError("invalid step sizes: " + "; ".join(map(str, violations)))
    step_fn = spdhg_step if algorithm == "spdhg" else pdhg_step
    per_epoch = problem.n_blocks if algorithm == "spdhg" else 1
    total_steps = int(round(epochs * per_epoch))
    stride = max(1, int(round(log_every * per_epoch)))

    bregman_ok = (target is not None and target.saddle is not None
                  and _is_quadratic(problem))
    if bregman_ok:
        from . import theory
    phi_target = problem.objective(target.x) if target is not None else None

    state = init_state(problem, x0=x0, seed=seed)
    t0 = time.perf_counter()
    records = []
    phi0 = None

    def log(state):
        nonlocal phi0
        phi = problem.objective(state.x)
        if phi0 is None:
            phi0 = phi
        guard = DIVERGENCE_FACTOR * phi0 if phi0 > 0 else DIVERGENCE_FACTOR
        epoch = state.k / per_epoch
        if not np.isfinite(phi) or phi > guard:
            raise DivergenceError(steps.gamma, epoch, phi)
        rel = dist = gap = None
        if target is not None:
            denom = phi0 - phi_target
            rel = (phi - phi_target) / denom if denom != 0 else None
            dist = float(np.linalg.norm(state.x - target.x))
        if bregman_ok:
            x_hat, y_hat = target.saddle
            gap = theory.bregman_gap(problem, state.x, state.y, x_hat, y_hat)
        records.append(ConvergenceRecord(
            epoch=epoch, objective=phi, relative_objective=rel,
            distance_to_target=dist, bregman_gap=gap,
            wall_time_s=time.perf_counter() - t0, seed=seed,
            algorithm=algorithm, gamma=steps.gamma))

    log(state)
    for k in range(1, total_steps + 1):
        state = step_fn(problem, state, steps)
        if k % stride == 0 or k == total_steps:
            log(state)
    return records, state


@dataclasses.dataclass
class GammaRunResult:
    gamma: float
    records: Optional[list]
    final_objective: float
    diverged: bool


def gamma_search(problem, algorithm, grid, epochs, seed=0, log_every=1.0):
    """Run every gamma in the grid and pick the lowest final objective.

    All runs use the same seed. Diverged gammas rank last; ties break
    toward the smaller gamma. Raises if every gamma diverges.

    Returns ``(gamma_star, {gamma: GammaRunResult})``.
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("gamma grid must be nonempty")
    results = {}
    for gamma in grid:
        steps = compute_step_sizes(problem, gamma, algorithm)
        try:
            records, _ = run(problem, algorithm, steps, epochs,
                             log_every=log_every, seed=seed)
            results[gamma] = GammaRunResult(
                gamma=gamma, records=records,
                final_objective=records[-1].objective, diverged=False)
        except DivergenceError:
            results[gamma] = GammaRunResult(
                gamma=gamma, records=None, final_objective=np.inf,
                diverged=True)
    if all(r.diverged for r in results.values()):
        status = ", ".join(f"gamma={g:g}: diverged" for g in grid)
        raise RuntimeError(f"every gamma diverged ({status})")
    best = min(results.values(), key=lambda r: (r.final_objective, r.gamma))
    return best.gamma, results
