"""Optional numba acceleration.

Hot kernels are written once in a numba-compatible subset of Python/numpy and
decorated with :func:`njit`.  Setting ``GOLDENBALL_DISABLE_NUMBA=1`` (or
running without numba installed) leaves them as plain Python functions, which
is the reference path the accelerated one is checked against.
"""
import os

_DISABLED = os.environ.get("GOLDENBALL_DISABLE_NUMBA", "").strip().lower() in {
    "1", "true", "yes", "on",
}

try:
    if _DISABLED:
        raise ImportError
    import numba as _numba

    NUMBA_ENABLED = True
except ImportError:
    _numba = None
    NUMBA_ENABLED = False


def njit(*args, **kwargs):
    """``numba.njit`` when acceleration is enabled, identity otherwise."""
    if NUMBA_ENABLED:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func
