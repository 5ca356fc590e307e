"""Optional numba acceleration.

Set ``DIRACMAP_NUMBA=0`` to force the pure-numpy code paths.  When numba is
not importable the numpy paths are used regardless of the flag.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("DIRACMAP_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


def njit(func):
    """Compile ``func`` with numba when available; otherwise return it unchanged."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, fastmath=False)(func)
