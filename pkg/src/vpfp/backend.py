"""Numba / pure-numpy backend selection for the hot kernels.

Numba is used whenever it imports successfully, unless the environment
variable ``VPFP_NUMBA`` is set to ``0``/``false``/``off``/``no``, in which
case the vectorized numpy fallbacks run instead.  Both implementations of
every kernel live in :mod:`vpfp.kernels` so they can be benchmarked against
each other (see ``benchmarks/bench_backends.py``).
"""

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on stripped installs
    numba = None
    HAS_NUMBA = False


def _env_wants_numba() -> bool:
    flag = os.environ.get("VPFP_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


USE_NUMBA = HAS_NUMBA and _env_wants_numba()


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
