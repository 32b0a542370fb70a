# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled accumulation kernel: one pass over a float64 matrix producing
the entry sum, the sum of squares, and the positive-entry mass.

All three totals use Neumaier compensated summation, so each carries at most
one rounding of the exact value even under heavy cancellation. The loop runs
without the GIL, which lets experiment cells scale across threads.
"""

from libc.math cimport fabs

BACKEND = "cython"


cdef void _stats(const double[:, ::1] x, double* out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n0 = x.shape[0], n1 = x.shape[1]
    cdef double s = 0.0, sc = 0.0        # entry sum + compensation
    cdef double q = 0.0, qc = 0.0        # square sum + compensation
    cdef double p = 0.0, pc = 0.0        # positive mass + compensation
    cdef double v, w, t
    for i in range(n0):
        for j in range(n1):
            v = x[i, j]

            t = s + v
            if fabs(s) >= fabs(v):
                sc += (s - t) + v
            else:
                sc += (v - t) + s
            s = t

            w = v * v
            t = q + w
            if q >= w:
                qc += (q - t) + w
            else:
                qc += (w - t) + q
            q = t

            if v > 0.0:
                t = p + v
                if p >= v:
                    pc += (p - t) + v
                else:
                    pc += (v - t) + p
                p = t
    out[0] = s + sc
    out[1] = q + qc
    out[2] = p + pc


def matrix_stats(const double[:, ::1] x):
    """Return (sum, sum of squares, positive mass) of a 2-D float64 array."""
    cdef double out[3]
    with nogil:
        _stats(x, out)
    return out[0], out[1], out[2]
