"""Numba shim.

JIT compilation is on by default.  Setting ``QOPS_DISABLE_NUMBA=1`` (or
running where numba cannot be imported) switches every kernel to its
pure-numpy fallback.
"""

import os
import warnings

_FALSY = {"", "0", "false", "no", "off"}


def _disabled_by_env() -> bool:
    return os.environ.get("QOPS_DISABLE_NUMBA", "").strip().lower() not in _FALSY


try:
    if _disabled_by_env():
        raise ImportError("disabled through QOPS_DISABLE_NUMBA")
    from numba import config as _config
    from numba import njit, prange

    # prefer OpenMP; a too-old TBB otherwise warns on first parallel call
    if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
        _config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAVE_NUMBA = True
except ImportError as exc:  # pragma: no cover - exercised via subprocess test
    if not _disabled_by_env():
        warnings.warn(f"numba unavailable ({exc}); using numpy kernels")
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
