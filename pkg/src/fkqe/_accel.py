"""Optional numba acceleration.

Set ``FKQE_DISABLE_NUMBA=1`` to force the pure-numpy kernels even when
numba is importable.
"""

import os


def _noop_jit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(f):
        return f

    return wrap


def _flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


# numba probes TBB first and warns when it is too old; workqueue is always present
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

DISABLED = _flag("FKQE_DISABLE_NUMBA")
USE_NUMBA = HAVE_NUMBA and not DISABLED

if HAVE_NUMBA:
    from numba import njit, prange
else:  # pragma: no cover
    njit = _noop_jit
    prange = range


def default_backend():
    return "numba" if USE_NUMBA else "numpy"


def set_threads(k):
    """Cap numba's worker pool; ignored on the numpy backend."""
    if HAVE_NUMBA and k:
        numba.set_num_threads(max(1, min(int(k), numba.config.NUMBA_NUM_THREADS)))
