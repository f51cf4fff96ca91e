# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_fallback.py`` for the reference semantics."""
import numpy as np

from . import _fallback


cdef double _lag_product(const double[:, ::1] x,
                         Py_ssize_t a1, Py_ssize_t a2,
                         Py_ssize_t b1, Py_ssize_t b2,
                         Py_ssize_t r1, Py_ssize_t r2) noexcept nogil:
    # sum over k1 < r1, k2 < r2 of x[a1+k1, a2+k2] * x[b1+k1, b2+k2]
    cdef Py_ssize_t k1, k2
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef const double* pa
    cdef const double* pb
    for k1 in range(r1):
        pa = &x[a1 + k1, a2]
        pb = &x[b1 + k1, b2]
        k2 = 0
        while k2 + 4 <= r2:
            s0 += pa[k2] * pb[k2]
            s1 += pa[k2 + 1] * pb[k2 + 1]
            s2 += pa[k2 + 2] * pb[k2 + 2]
            s3 += pa[k2 + 3] * pb[k2 + 3]
            k2 += 4
        while k2 < r2:
            s0 += pa[k2] * pb[k2]
            k2 += 1
    return (s0 + s1) + (s2 + s3)


def _lrv_2d(const double[:, ::1] x, Py_ssize_t q, bint signed):
    cdef Py_ssize_t n1 = x.shape[0], n2 = x.shape[1]
    cdef Py_ssize_t m1, m2, am2
    cdef double w1, w2, total = 0.0, mult
    with nogil:
        for m1 in range(q):
            w1 = 1.0 - <double>m1 / q
            if not signed:
                for m2 in range(q):
                    w2 = 1.0 - <double>m2 / q
                    mult = (2.0 if m1 else 1.0) * (2.0 if m2 else 1.0)
                    total += mult * w1 * w2 * _lag_product(x, 0, 0, m1, m2, n1 - m1, n2 - m2)
            else:
                # one representative per +/- pair: m1 > 0, or m1 == 0 and m2 >= 0
                for m2 in range(-(q - 1), q):
                    if m1 == 0 and m2 < 0:
                        continue
                    am2 = m2 if m2 >= 0 else -m2
                    w2 = 1.0 - <double>am2 / q
                    mult = 1.0 if (m1 == 0 and m2 == 0) else 2.0
                    if m2 >= 0:
                        total += mult * w1 * w2 * _lag_product(x, 0, 0, m1, m2, n1 - m1, n2 - m2)
                    else:
                        total += mult * w1 * w2 * _lag_product(x, 0, am2, m1, 0, n1 - m1, n2 - am2)
    return total / (n1 * n2)


def _lrv_1d(const double[::1] x, Py_ssize_t q):
    cdef Py_ssize_t n = x.shape[0], m, k
    cdef double total = 0.0, s
    with nogil:
        for m in range(q):
            s = 0.0
            for k in range(n - m):
                s += x[k] * x[k + m]
            total += (2.0 if m else 1.0) * (1.0 - <double>m / q) * s
    return total / n


def lrv(xc, Py_ssize_t q, bint signed=False):
    if xc.ndim == 2:
        return _lrv_2d(xc, q, signed)
    if xc.ndim == 1:
        # in one dimension folding and signed lags coincide
        return _lrv_1d(xc, q)
    return _fallback.lrv(xc, q, signed)


def _psum_moments_2d(const double[:, ::1] x):
    cdef Py_ssize_t n1 = x.shape[0], n2 = x.shape[1], i, j
    cdef double[::1] col = np.zeros(n2)
    cdef double run, s = 0.0, ss = 0.0
    with nogil:
        for i in range(n1):
            run = 0.0
            for j in range(n2):
                col[j] += x[i, j]
                run += col[j]
                s += run
                ss += run * run
    return s, ss


def _psum_moments_1d(const double[::1] x):
    cdef Py_ssize_t n = x.shape[0], k
    cdef double run = 0.0, s = 0.0, ss = 0.0
    with nogil:
        for k in range(n):
            run += x[k]
            s += run
            ss += run * run
    return s, ss


def psum_moments(xc):
    if xc.ndim == 2:
        return _psum_moments_2d(xc)
    if xc.ndim == 1:
        return _psum_moments_1d(xc)
    return _fallback.psum_moments(xc)


def _sheet_u_2d(const double[:, ::1] noise):
    cdef Py_ssize_t g = noise.shape[0], i, j
    cdef double[::1] col = np.zeros(g)
    cdef double scale = 1.0 / g, total = 0.0, b1, run, dev, ti
    cdef double s = 0.0, ss = 0.0, cells = <double>g * g
    with nogil:
        for i in range(g):
            for j in range(g):
                total += noise[i, j]
        b1 = total * scale
        for i in range(g):
            run = 0.0
            ti = (i + 1) * scale
            for j in range(g):
                col[j] += noise[i, j]
                run += col[j]
                dev = run * scale - ti * ((j + 1) * scale) * b1
                s += dev
                ss += dev * dev
    s /= cells
    return ss / cells - s * s


def _sheet_u_1d(const double[::1] noise):
    cdef Py_ssize_t g = noise.shape[0], k
    cdef double scale = 1.0 / (<double>g) ** 0.5
    cdef double total = 0.0, run = 0.0, b1, dev, s = 0.0, ss = 0.0
    with nogil:
        for k in range(g):
            total += noise[k]
        b1 = total * scale
        for k in range(g):
            run += noise[k]
            dev = run * scale - ((k + 1) / <double>g) * b1
            s += dev
            ss += dev * dev
    s /= g
    return ss / g - s * s


def sheet_u(noise):
    if noise.ndim == 2:
        return _sheet_u_2d(noise)
    if noise.ndim == 1:
        return _sheet_u_1d(noise)
    return _fallback.sheet_u(noise)


def ar_filter_2d(const double[:, ::1] eps, double a):
    cdef Py_ssize_t n1 = eps.shape[0], n2 = eps.shape[1], i, j
    out_arr = np.empty((n1, n2))
    cdef double[:, ::1] out = out_arr
    cdef double up, left, diag, a2 = a * a
    with nogil:
        for i in range(n1):
            for j in range(n2):
                up = out[i - 1, j] if i > 0 else 0.0
                left = out[i, j - 1] if j > 0 else 0.0
                diag = out[i - 1, j - 1] if (i > 0 and j > 0) else 0.0
                out[i, j] = a * up + a * left - a2 * diag + eps[i, j]
    return out_arr
