"""
Numba entry points, switchable off (SITEVEC_DISABLE_JIT=1) so the training
kernels can be stepped through with the plain Python interpreter.
"""

import os
import warnings

JIT_ENABLED = os.getenv("SITEVEC_DISABLE_JIT", "0").strip() not in {"1", "true", "True"}

try:
    if not JIT_ENABLED:
        raise ImportError("JIT disabled by SITEVEC_DISABLE_JIT")
    import numba
    from numba import njit, prange

    def max_threads() -> int:
        return int(numba.config.NUMBA_NUM_THREADS)

    def set_threads(n: int) -> int:
        n = max(1, min(int(n), max_threads()))
        numba.set_num_threads(n)
        return n

except ImportError as e:  # noqa: BLE001
    if JIT_ENABLED:
        warnings.warn(f"numba unavailable, training kernels run interpreted: {e}")
    JIT_ENABLED = False

    def njit(func=None, **kwargs):  # type: ignore[no-redef]
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper

    def prange(*args):  # type: ignore[no-redef]
        return range(*args)

    def max_threads() -> int:
        return 1

    def set_threads(n: int) -> int:
        return 1
