# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-frequency kernels (see _pykernels for the reference versions)."""
import numpy as np

from libc.math cimport exp, sqrt, sin, cos, sinh, cosh, fabs


cdef double SERIES_CUT = 1e-8   # |z|^2 below this uses the quartic Taylor series
cdef double SMALL_ARG = 0.25    # |h t|^2 below this uses the centered form


def green_entries(const double[::1] r, double t, double nu):
    cdef Py_ssize_t i, m = r.shape[0]
    g11 = np.empty(m)
    g12 = np.empty(m)
    g21 = np.empty(m)
    g22 = np.empty(m)
    cdef double[::1] o11 = g11, o12 = g12, o21 = g21, o22 = g22
    cdef double rr, lb, q, z2, z, el, ch, sc, d1, c, h, lm, lp, ep, em, dl
    for i in range(m):
        rr = r[i]
        if rr == 0.0:
            o11[i] = 1.0
            o12[i] = 0.0
            o21[i] = 0.0
            o22[i] = 1.0
            continue
        lb = -0.5 * nu * rr * rr
        q = 0.25 * nu * nu * rr * rr * rr * rr - rr * rr
        z2 = q * t * t
        if fabs(z2) < SMALL_ARG or q < 0.0:
            el = exp(lb * t)
            if fabs(z2) < SERIES_CUT:
                ch = 1.0 + z2 / 2.0 + z2 * z2 / 24.0
                sc = 1.0 + z2 / 6.0 + z2 * z2 / 120.0
            elif q > 0.0:
                z = sqrt(z2)
                ch = cosh(z)
                sc = sinh(z) / z
            else:
                z = sqrt(-z2)
                ch = cos(z)
                sc = sin(z) / z
            d1 = t * el * sc
            c = el * ch
            o11[i] = c - lb * d1
            o22[i] = c + lb * d1
        else:
            h = sqrt(q)
            lm = lb - h
            lp = rr * rr / lm
            ep = exp(lp * t)
            em = exp(lm * t)
            dl = lp - lm
            d1 = (ep - em) / dl
            o11[i] = (lp * em - lm * ep) / dl
            o22[i] = (lp * ep - lm * em) / dl
        o12[i] = -rr * d1
        o21[i] = rr * d1
    return g11, g12, g21, g22


def smooth_ramp(const double[::1] s):
    cdef Py_ssize_t i, m = s.shape[0]
    out = np.empty(m)
    cdef double[::1] o = out
    cdef double x, a, b
    for i in range(m):
        x = s[i]
        if x <= 0.0:
            o[i] = 0.0
        elif x >= 1.0:
            o[i] = 1.0
        else:
            a = exp(-1.0 / x)
            b = exp(-1.0 / (1.0 - x))
            o[i] = a / (a + b)
    return out


def apply_2x2(const double[::1] m11, const double[::1] m12,
              const double[::1] m21, const double[::1] m22,
              const double complex[::1] a, const double complex[::1] d):
    cdef Py_ssize_t i, m = a.shape[0]
    out_a = np.empty(m, dtype=np.complex128)
    out_d = np.empty(m, dtype=np.complex128)
    cdef double complex[::1] oa = out_a, od = out_d
    cdef double complex x, y
    for i in range(m):
        x = a[i]
        y = d[i]
        oa[i] = m11[i] * x + m12[i] * y
        od[i] = m21[i] * x + m22[i] * y
    return out_a, out_d
