"""Kernel backend selection.

Set ``GOMKIT_DISABLE_NUMBA=1`` to run every kernel through its pure-numpy
path. Numba is also skipped silently when it cannot be imported.
"""
import os

_disabled = os.environ.get("GOMKIT_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba
    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _disabled


def njit(func):
    """Compile ``func`` in nopython mode when numba is usable, else return it."""
    if HAS_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def backend():
    return "numba" if USE_NUMBA else "numpy"
