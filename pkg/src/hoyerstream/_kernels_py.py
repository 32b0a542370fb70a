"""NumPy fallback for the accumulation kernel.

``np.sum`` accumulates pairwise and ``np.dot`` goes through BLAS; both keep
the error of the totals within a few ulps of ``sum(|x|)`` at the matrix sizes
this package targets (up to ~1e6 entries), which is enough for the 1e-12
relative tolerances the index math is tested at. The compiled kernel in
``_kernels.pyx`` additionally bounds the error under heavy cancellation.
"""

import numpy as np

BACKEND = "numpy"


def matrix_stats(x):
    """Return (sum, sum of squares, positive mass) of a 2-D float64 array."""
    flat = x.reshape(-1)
    total = float(np.sum(flat))
    square = float(np.dot(flat, flat))
    positive = float(np.sum(flat, where=flat > 0.0, initial=0.0))
    return total, square, positive
