"""Backend switch for the hot kernels.

Set ``RANKONE_BACKEND=numpy`` to bypass numba and run the vectorized numpy
fallbacks instead.  The choice is read once at import time.
"""

import os

_requested = os.environ.get("RANKONE_BACKEND", "numba").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and _requested != "numpy"


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged."""
    if _numba is None:
        return func
    return _numba.njit(cache=True)(func)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
