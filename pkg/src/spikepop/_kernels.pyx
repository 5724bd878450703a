# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for LIF encoding and the mixed-MI neighbour counts.

The pure-numpy twins live in ``_fallback.py``; both must return identical
arrays for identical inputs.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def lif_encode_flat(const double[::1] x, const cnp.int64_t[::1] offsets,
                    double threshold, double decay):
    """Encode concatenated stimuli; ``offsets`` has one more entry than stimuli."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_stim = offsets.shape[0] - 1
    out = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] w = out
    cdef Py_ssize_t s, i
    cdef double v
    with nogil:
        for s in range(n_stim):
            v = 0.0
            for i in range(offsets[s], offsets[s + 1]):
                v = v * decay + x[i]
                if v >= threshold:
                    w[i] = 1
                    v = 0.0
    return out


cdef inline Py_ssize_t _first_not_below(const double[::1] xg, Py_ssize_t lo,
                                        Py_ssize_t hi, double x, double d) nogil:
    # first j in [lo, hi) with xg[j] - x >= d; predicate is monotone in j
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if xg[mid] - x < d:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _first_inside(const double[::1] xg, Py_ssize_t lo,
                                     Py_ssize_t hi, double x, double d) nogil:
    # first j in [lo, hi) with x - xg[j] < d
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if x - xg[mid] < d:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline Py_ssize_t _lower(const double[::1] a, Py_ssize_t lo,
                              Py_ssize_t hi, double x) nogil:
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _upper(const double[::1] a, Py_ssize_t lo,
                              Py_ssize_t hi, double x) nogil:
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def neighbour_counts(const double[::1] xs, const cnp.int64_t[::1] start,
                     const cnp.int64_t[::1] stop, const double[::1] xg, int k):
    """Per-sample (k_i, m_i) for class-sorted amplitudes ``xs``.

    ``start[p]:stop[p]`` is the class block holding position ``p`` and
    ``xg`` is the sorted array of all amplitudes.
    """
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t ng = xg.shape[0]
    k_out = np.empty(n, dtype=np.int64)
    m_out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] kk = k_out
    cdef cnp.int64_t[::1] mm = m_out
    cdef Py_ssize_t p, s, e, kc, a, a_lo, a_hi, pos, lo, hi
    cdef double x, d, left, right, r
    with nogil:
        for p in range(n):
            s = start[p]
            e = stop[p]
            x = xs[p]
            kc = e - s - 1
            if kc > k:
                kc = k
            a_lo = kc - (e - 1 - p)
            if a_lo < 0:
                a_lo = 0
            a_hi = p - s
            if a_hi > kc:
                a_hi = kc
            d = INFINITY
            for a in range(a_lo, a_hi + 1):
                left = x - xs[p - a]
                right = xs[p - a + kc] - x
                r = left if left > right else right
                if r < d:
                    d = r
            if d > 0.0:
                kk[p] = kc
                pos = _lower(xg, 0, ng, x)
                hi = _first_not_below(xg, pos, ng, x, d)
                lo = _first_inside(xg, 0, pos, x, d)
                mm[p] = hi - lo
            else:
                kk[p] = _upper(xs, s, e, x) - _lower(xs, s, e, x)
                mm[p] = _upper(xg, 0, ng, x) - _lower(xg, 0, ng, x)
    return k_out, m_out
