"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the NumPy fallback.
Set ``PPNS_BACKEND=python`` to force the fallback (``=cython`` makes a
missing extension an error instead of a silent fallback).
"""

import os

from . import _pykernels

_requested = os.environ.get("PPNS_BACKEND", "auto").lower()

if _requested == "python":
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        kernels = _pykernels
        BACKEND = "python"

sequential_draw = kernels.sequential_draw
wallenius_log_root = kernels.wallenius_log_root

__all__ = ["BACKEND", "sequential_draw", "wallenius_log_root"]
