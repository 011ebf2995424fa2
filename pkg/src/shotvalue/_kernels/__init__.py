"""Batch polynomial kernels with a compiled core and a numpy fallback.

The compiled extension is preferred when present; set SHOTVALUE_FORCE_NUMPY=1
to force the fallback (used by the benchmark and for debugging). The active
implementation is reported in BACKEND.
"""

import os

from . import _poly_np

BACKEND = "numpy"
_impl = _poly_np

if not os.environ.get("SHOTVALUE_FORCE_NUMPY"):
    try:
        from . import _poly_cy as _impl_cy

        _impl = _impl_cy
        BACKEND = "cython"
    except ImportError:
        pass

poly_eval = _impl.poly_eval
poly_deriv = _impl.poly_deriv
smallest_root_in = _impl.smallest_root_in
first_local_max = _impl.first_local_max

__all__ = [
    "BACKEND",
    "poly_eval",
    "poly_deriv",
    "smallest_root_in",
    "first_local_max",
]
