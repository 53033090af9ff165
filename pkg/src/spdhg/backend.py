"""Kernel backend selection.

The hot inner-loop kernels exist twice: a Cython extension
(``spdhg._kernels``) and a pure-numpy fallback (``spdhg._kernels_py``).
The compiled module is preferred when importable; set the environment
variable ``SPDHG_PURE_PYTHON=1`` to force the fallback. ``benchmarks/
bench_kernels.py`` compares the two.
"""

import os

from . import _kernels_py


def _select():
    if os.environ.get("SPDHG_PURE_PYTHON", "").strip() in ("1", "true", "yes"):
        return _kernels_py
    try:
        from . import _kernels
    except ImportError:
        return _kernels_py
    return _kernels


_impl = _select()

BACKEND = _impl.BACKEND_NAME

gradient_forward = _impl.gradient_forward
gradient_adjoint = _impl.gradient_adjoint
group_project = _impl.group_project
group_norms = _impl.group_norms
sqdist_dual_prox = _impl.sqdist_dual_prox
