"""Numba switch.

Set ``STNCHAIN_DISABLE_NUMBA=1`` to force the pure-numpy kernels. The flag
is read once at import time.
"""
import os

_FLAG = os.environ.get("STNCHAIN_DISABLE_NUMBA", "").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

NUMBA_AVAILABLE = _numba is not None
USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in ("1", "true", "yes", "on")

njit_kwargs = {"nogil": True, "cache": True}


def njit(fn):
    """Compile ``fn`` with numba when available, otherwise return it as is."""
    if not NUMBA_AVAILABLE:
        return fn
    return _numba.njit(**njit_kwargs)(fn)


def backend():
    return "numba" if USE_NUMBA else "numpy"
