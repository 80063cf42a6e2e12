"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``APERIODIC_SPECTRUM_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

import numpy as np

from . import _kernels_py

try:
    if os.environ.get("APERIODIC_SPECTRUM_PURE_PYTHON", "") == "1":
        raise ImportError("pure-Python backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def _impl(name, backend):
    if backend is None:
        backend = BACKEND
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return getattr(_compiled, name)
    if backend == "python":
        return getattr(_kernels_py, name)
    raise ValueError(f"unknown backend {backend!r}")


def trace_final(x1, x0, xm1, n, guard=1e-12, backend=None):
    """Level-``n`` trace, its log-magnitude, escape index and ambiguity flag
    for each initial triple ``(x_1, x_0, x_{-1})``."""
    args = [np.ascontiguousarray(np.atleast_1d(v), dtype=np.float64) for v in (x1, x0, xm1)]
    return _impl("trace_final", backend)(*args, int(n), float(guard))


def word_product(mats, codes, backend=None):
    """Log-scaled ordered product of per-letter matrices, per energy."""
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    codes = np.ascontiguousarray(codes, dtype=np.intp)
    return _impl("word_product", backend)(mats, codes)
