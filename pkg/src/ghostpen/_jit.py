"""Optional numba acceleration.

Hot kernels are written in the numba-compatible subset of numpy so the same
source runs compiled or interpreted. Set ``GHOSTPEN_NO_NUMBA=1`` to force the
interpreted path (useful for debugging and for the kernel benchmark).
"""

import os

_disabled = os.environ.get("GHOSTPEN_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag in a subprocess
    _numba = None
    HAVE_NUMBA = False


def kernel(fn):
    """Compile ``fn`` with numba when available, else return it untouched.

    The original Python function stays reachable as ``.py_func`` either way.
    """
    if HAVE_NUMBA:
        return _numba.njit(cache=True)(fn)
    fn.py_func = fn
    return fn
