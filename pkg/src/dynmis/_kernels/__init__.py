"""Hot graph kernels: compiled when available, pure Python otherwise.

Set ``DYNMIS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels as python

cython = None
if os.environ.get("DYNMIS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as cython
    except ImportError:
        cython = None

active = cython if cython is not None else python

BACKEND = active.BACKEND
hop_distances = active.hop_distances
diameter = active.diameter
greedy_mis = active.greedy_mis
round_estimates = active.round_estimates
exact_mis = active.exact_mis
neighborhood = active.neighborhood
is_independent = active.is_independent

__all__ = [
    "BACKEND",
    "active",
    "cython",
    "python",
    "hop_distances",
    "diameter",
    "greedy_mis",
    "round_estimates",
    "exact_mis",
    "neighborhood",
    "is_independent",
]
