"""Backend selection for the hot kernels.

Set ``OBCSEQ_DISABLE_NUMBA=1`` to force the pure-numpy kernels. The flag is read
once at import time; numba is also skipped if it is not importable.
"""
import os

_DISABLED = os.environ.get("OBCSEQ_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by OBCSEQ_DISABLE_NUMBA")
    import numba  # noqa: F401
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator


def backend() -> str:
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if HAVE_NUMBA else "numpy"
