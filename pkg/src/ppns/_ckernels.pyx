# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``.

Arithmetic follows the Python fallback step for step; the backend parity
tests compare the two for exact equality.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport expm1, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()


def sequential_draw(weights, uniforms):
    cdef const double[::1] w0 = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[:, ::1] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t trials = u.shape[0], k = u.shape[1], n = w0.shape[0]
    out_arr = np.empty((trials, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef double *w = <double *> malloc(max(n, 1) * sizeof(double))
    cdef Py_ssize_t t, j, i, chosen, last
    cdef double total, target, acc
    if w == NULL:
        raise MemoryError()
    try:
        for t in range(trials):
            for i in range(n):
                w[i] = w0[i]
            for j in range(k):
                total = 0.0
                for i in range(n):
                    total += w[i]
                target = u[t, j] * total
                acc = 0.0
                chosen = -1
                last = -1
                for i in range(n):
                    if w[i] > 0.0:
                        acc += w[i]
                        last = i
                        if acc > target:
                            chosen = i
                            break
                if chosen < 0:
                    chosen = last
                out[t, j] = chosen
                w[chosen] = 0.0
    finally:
        free(w)
    return out_arr


cdef double _excess(double s, const double[::1] m, const double[::1] w, double k) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(m.shape[0]):
        acc += m[i] * -expm1(-s * w[i])
    return acc - k


def wallenius_log_root(sizes, weights, double k):
    cdef const double[::1] m = np.ascontiguousarray(sizes, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double lo = 0.0, hi = 1.0, mid
    cdef int it
    with nogil:
        while _excess(hi, m, w, k) < 0.0 and hi < 1e300:
            lo = hi
            hi *= 2.0
        for it in range(2200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _excess(mid, m, w, k) < 0.0:
                lo = mid
            else:
                hi = mid
    if fabs(_excess(lo, m, w, k)) <= fabs(_excess(hi, m, w, k)):
        return lo
    return hi
