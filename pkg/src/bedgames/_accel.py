"""Numba switch for the hot kernels.

Set ``BEDGAMES_DISABLE_NUMBA=1`` to force the pure-numpy paths. Both paths
consume randomness identically, so results do not depend on the flag.
"""

import os

_disabled = os.environ.get("BEDGAMES_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _disabled:
        raise ImportError("disabled by BEDGAMES_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    njit = None
    HAVE_NUMBA = False


def use_numba() -> bool:
    return HAVE_NUMBA
