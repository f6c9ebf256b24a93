"""Numba switch.

Set ``FPLAB_DISABLE_NUMBA=1`` to run every kernel through its pure-numpy
twin. The flag is read once at import time.
"""

import os

_FLAG = os.environ.get("FPLAB_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(func=None, **kwargs):
    """``numba.njit(cache=True)``; compiles unconditionally so that both
    backends stay importable side by side for benchmarking."""
    kwargs.setdefault("cache", True)

    def wrap(f):
        if numba is None:
            return f
        return numba.njit(**kwargs)(f)

    if func is None:
        return wrap
    return wrap(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
