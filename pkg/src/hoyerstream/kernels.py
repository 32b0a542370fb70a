"""Kernel dispatch: compiled extension when available, NumPy otherwise.

Set the environment variable ``HOYERSTREAM_NO_EXT=1`` before import to force
the NumPy fallback (useful for benchmarking the two side by side, see
``benchmarks/bench_kernels.py``).
"""

import os

from . import _kernels_py

if os.environ.get("HOYERSTREAM_NO_EXT"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
matrix_stats = _impl.matrix_stats


def available_backends():
    """All importable kernel implementations, keyed by backend name."""
    backends = {_kernels_py.BACKEND: _kernels_py}
    try:
        from . import _kernels

        backends[_kernels.BACKEND] = _kernels
    except ImportError:
        pass
    return backends
