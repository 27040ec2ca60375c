"""Backend selection for the Monte-Carlo kernels.

Set ``TERNARY_RRAM_NUMBA=0`` in the environment before import to force the
pure-numpy path. When numba is missing the numpy path is used automatically.
"""

import os
import warnings

_flag = os.environ.get("TERNARY_RRAM_NUMBA", "1").strip().lower()
_wanted = _flag not in ("0", "false", "no", "off")

HAVE_NUMBA = False
if _wanted:
    try:
        import numba
        from numba import njit, prange

        if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
            # the bundled TBB is often too old and only produces a warning
            numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

        HAVE_NUMBA = True
    except ImportError:
        warnings.warn("numba not found, falling back to the numpy kernels")

if not HAVE_NUMBA:

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def identity(fn):
            return fn

        return identity

    prange = range

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def set_threads(n):
    """Set the worker count used by the numba kernels (no-op for numpy)."""
    if HAVE_NUMBA and n:
        import numba

        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
