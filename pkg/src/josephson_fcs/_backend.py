"""Kernel backend selection.

The hot kernels (covariance-flow integrator, stationary Newton solver) ship
in two equivalent implementations: numba-compiled per-point loops and a pure
numpy path (batch-vectorized Newton, plain-Python integrator).  Selection:

  * default: numba if importable, else numpy;
  * ``JFCS_PURE_NUMPY=1`` in the environment forces the numpy path.

``benchmarks/bench_backends.py`` times the two against each other.
"""
from __future__ import annotations

import os

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("JFCS_PURE_NUMPY", "0") != "1"

if USE_NUMBA:
    from . import _kernels_numba as kernels
else:
    from . import _kernels_numpy as kernels


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
