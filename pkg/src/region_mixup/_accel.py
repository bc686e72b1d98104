"""Optional numba acceleration.

Set ``REGION_MIXUP_NUMBA=0`` to force the pure-numpy kernels even when numba
is importable. Any other value (or unset) uses numba when available.
"""
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("REGION_MIXUP_NUMBA", "1") != "0"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is installed, otherwise an identity decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap
