"""Pure numpy versions of the per-frequency kernels.

These are the reference implementations; the compiled module must agree with
them to roundoff.
"""
import numpy as np

SERIES_CUT = 1e-8
SMALL_ARG = 0.25


def green_entries(r, t, nu):
    """Entries of the 2x2 linear propagator at radii ``r`` and time ``t``."""
    r = np.asarray(r, dtype=float)
    g11 = np.ones_like(r)
    g22 = np.ones_like(r)
    d1 = np.zeros_like(r)

    lb = -0.5 * nu * r * r
    q = 0.25 * nu * nu * r**4 - r * r
    z2 = q * t * t
    nz = r != 0.0
    centered = nz & ((np.abs(z2) < SMALL_ARG) | (q < 0.0))
    split = nz & ~centered

    if centered.any():
        zc = z2[centered]
        ch = np.empty_like(zc)
        sc = np.empty_like(zc)
        tiny = np.abs(zc) < SERIES_CUT
        pos = ~tiny & (zc > 0)
        neg = ~tiny & (zc < 0)
        ch[tiny] = 1.0 + zc[tiny] / 2.0 + zc[tiny] ** 2 / 24.0
        sc[tiny] = 1.0 + zc[tiny] / 6.0 + zc[tiny] ** 2 / 120.0
        zp = np.sqrt(zc[pos])
        ch[pos] = np.cosh(zp)
        sc[pos] = np.sinh(zp) / zp
        zn = np.sqrt(-zc[neg])
        ch[neg] = np.cos(zn)
        sc[neg] = np.sin(zn) / zn
        lbc = lb[centered]
        el = np.exp(lbc * t)
        dc = t * el * sc
        c = el * ch
        d1[centered] = dc
        g11[centered] = c - lbc * dc
        g22[centered] = c + lbc * dc

    if split.any():
        rs = r[split]
        lm = lb[split] - np.sqrt(q[split])
        lp = rs * rs / lm
        ep = np.exp(lp * t)
        em = np.exp(lm * t)
        dl = lp - lm
        d1[split] = (ep - em) / dl
        g11[split] = (lp * em - lm * ep) / dl
        g22[split] = (lp * ep - lm * em) / dl

    return g11, -r * d1, r * d1, g22


def smooth_ramp(s):
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 1.0, 1.0, 0.0)
    mid = (s > 0.0) & (s < 1.0)
    x = s[mid]
    with np.errstate(over="ignore", divide="ignore"):
        # subnormal x overflows 1/x; exp(-inf) = 0 is the right limit
        a = np.exp(-1.0 / x)
        b = np.exp(-1.0 / (1.0 - x))
    out[mid] = a / (a + b)
    return out


def apply_2x2(m11, m12, m21, m22, a, d):
    return m11 * a + m12 * d, m21 * a + m22 * d
