"""Numba switch.

Set ``QAGIBBS_NUMBA=0`` to force the pure-numpy kernels. Numba is also
skipped silently when it cannot be imported.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("QAGIBBS_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


def njit(fn):
    """Compile ``fn`` in nopython mode, or return None without numba."""
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=False, nogil=True)(fn)
