"""JIT selection for the hot kernels.

Set ``BELLBATTERY_DISABLE_NUMBA=1`` before import to force the pure-numpy
code paths (also used automatically when numba is not importable).
"""
from __future__ import annotations

import os

_DISABLED = os.environ.get("BELLBATTERY_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}

try:
    if _DISABLED:
        raise ImportError("numba disabled by BELLBATTERY_DISABLE_NUMBA")
    from numba import njit as _numba_njit

    NUMBA_AVAILABLE = True
except ImportError:
    _numba_njit = None
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE


def njit(func):
    """Compile ``func`` in nopython mode with on-disk caching, when numba is on."""
    if _numba_njit is None:
        return func
    return _numba_njit(cache=True)(func)


__all__ = ["NUMBA_AVAILABLE", "USE_NUMBA", "njit"]
