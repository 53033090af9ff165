"""Saddle-point solvers (PDHG and its randomized variant SPDHG) with a
parallel-MRI simulation harness and numerical convergence diagnostics."""

from .backend import BACKEND
from .linops import (BlockRow, CoilMultiply, Compose, Dft2, Gradient,
                     LinearOperator, Mask, ScaledIdentity, estimate_norm,
                     real_inner)
from .prox import (GroupL1, SquaredDistance, SquaredNorm, Zero,
                   conjugate_value, prox_dual, prox_primal, value)
from .solvers import (ConvergenceRecord, DivergenceError, SaddleProblem,
                      SolverState, StepSizes, Target, compute_step_sizes,
                      estimate_problem_norms, gamma_search, init_state,
                      pdhg_step, run, spdhg_step, validate_step_sizes)

__version__ = "0.1.0"
