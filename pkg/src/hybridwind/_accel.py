"""Numba acceleration switch.

Set ``HYBRIDWIND_DISABLE_NUMBA=1`` before import to force the pure-numpy
kernels (or when numba is not installed).
"""
import logging
import os

_DISABLED = os.environ.get("HYBRIDWIND_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    import numba

    logging.getLogger("numba").setLevel(logging.WARNING)
    # try OpenMP before TBB: an old TBB only produces a warning and is skipped anyway
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]
    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


if HAVE_NUMBA:
    prange = numba.prange
else:
    prange = range


def set_threads(n):
    """Cap the numba thread pool; no-op on the numpy path."""
    if HAVE_NUMBA and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
