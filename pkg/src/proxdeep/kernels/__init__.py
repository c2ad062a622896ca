"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``PROXDEEP_NUMBA`` is not set to ``0``. Both implementations stay
importable as ``numpy_impl`` and ``numba_impl`` (the latter is ``None``
without numba) so tests and benchmarks can compare them directly.
"""
import os

from . import _numpy as numpy_impl

try:
    from . import _numba as numba_impl
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None

USE_NUMBA = numba_impl is not None and os.environ.get("PROXDEEP_NUMBA", "1") != "0"

_impl = numba_impl if USE_NUMBA else numpy_impl

sigmoid = _impl.sigmoid
softmax_cols = _impl.softmax_cols
logsumexp_cols = _impl.logsumexp_cols
soft_threshold = _impl.soft_threshold
prox_multinomial_fb = _impl.prox_multinomial_fb
ista_gram = _impl.ista_gram

BACKEND = "numba" if USE_NUMBA else "numpy"

__all__ = ["sigmoid", "softmax_cols", "logsumexp_cols", "soft_threshold",
           "prox_multinomial_fb", "ista_gram", "numpy_impl", "numba_impl",
           "USE_NUMBA", "BACKEND"]
