"""The 2x2 linear propagator of the (a, d) system and related semigroups.

Per frequency r = |xi| the pair (a^, d^) obeys

    d/dt (a, d) = M (a, d),   M = [[0, -r], [r, -nu r^2]],

so the propagator is exp(tM).  Its entries are written with the divided
difference D1 = (e^{l+ t} - e^{l- t}) / (l+ - l-), and evaluated in a form that
stays real and accurate across the degenerate radius r = 2/nu.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .experiments.fitting import FitResult, fit_rate
from .lp import build_dyadic_system, delta_j
from .spectral import Grid, SpectralField, forward, make_grid, norm_of_samples, zero_nyquist


@dataclass
class EigenPair:
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray


def eigenvalues(xi_norm, nu_bar: float) -> EigenPair:
    """Roots of l^2 + nu r^2 l + r^2 = 0, computed without cancellation."""
    r = np.asarray(xi_norm, dtype=float)
    half_trace = -0.5 * nu_bar * r * r
    q = 0.25 * nu_bar**2 * r**4 - r * r
    sq = np.sqrt(np.abs(q))
    lm = np.where(q >= 0, half_trace - sq, half_trace - 1j * sq).astype(complex)
    lp = np.where(q >= 0, 0.0, half_trace + 1j * sq).astype(complex)
    real = (q >= 0) & (r > 0)
    # product form for the small real root
    lp = np.where(real, (r * r) / np.where(real, lm.real, 1.0), lp)
    lp = np.where(r == 0, 0.0, lp)
    lm = np.where(r == 0, 0.0, lm)
    return EigenPair(lp, lm)


def _check_nu(nu_bar):
    if not nu_bar > 0:
        raise ValueError(f"nu_bar must be positive, got {nu_bar}")


def green_entries(xi_norm, t: float, nu_bar: float):
    """(G11, G12, G21, G22) arrays at radii ``xi_norm``."""
    if t < 0:
        raise ValueError(f"propagator time must be non-negative, got {t}")
    _check_nu(nu_bar)
    return kernels.green_entries(np.asarray(xi_norm, dtype=float), t, nu_bar)


def ghat(xi_norm: float, t: float, nu_bar: float) -> np.ndarray:
    """The 2x2 propagator matrix at one radius."""
    g11, g12, g21, g22 = green_entries(np.array([float(xi_norm)]), t, nu_bar)
    return np.array([[g11[0], g12[0]], [g21[0], g22[0]]])


def high_frequency_threshold(nu_bar: float, R0: float | None = None) -> float:
    R0 = 2.0 / nu_bar if R0 is None else R0
    return max(R0, 10.0 / nu_bar)


@dataclass
class Expansion:
    """G = e^{-t/nu} E11 + e^{-nu r^2 t} E22 + G1 [[0,1],[-1,0]] + diag(G2_11, G2_22)."""

    G1: np.ndarray
    G2_11: np.ndarray
    G2_22: np.ndarray
    slow: np.ndarray      # e^{-t/nu}
    fast: np.ndarray      # e^{-nu r^2 t}

    @property
    def G2(self) -> np.ndarray:
        z = np.zeros_like(self.G2_11)
        return np.array([[self.G2_11, z], [z, self.G2_22]])

    def assemble(self) -> np.ndarray:
        return np.array([[self.slow + self.G2_11, self.G1],
                         [-self.G1, self.fast + self.G2_22]])


def ghat_expansion(xi_norm, t: float, nu_bar: float, R0: float | None = None) -> Expansion:
    """High-frequency split into the damped density mode, the parabolic mode,
    the off-diagonal G1 = -r D1 and the diagonal remainder G2.

    Computed from the real eigenvalues directly (not through ``ghat``), with
    the differences e^{l t} - e^{mode t} taken by expm1.
    """
    _check_nu(nu_bar)
    if t < 0:
        raise ValueError(f"propagator time must be non-negative, got {t}")
    r = np.asarray(xi_norm, dtype=float)
    R = high_frequency_threshold(nu_bar, R0)
    if np.any(r < R):
        raise ValueError(f"expansion needs |xi| >= {R:g} (high-frequency regime)")
    nu = nu_bar
    h = np.sqrt(0.25 * nu * nu * r**4 - r * r)
    lm = -0.5 * nu * r * r - h
    lp = r * r / lm
    dl = lp - lm
    ep, em = np.exp(lp * t), np.exp(lm * t)
    slow = np.exp(-t / nu)
    fast = np.exp(-nu * r * r * t)
    # l+ + 1/nu = r^2 / ((nu r^2 / 2 + h) nu l-), free of cancellation
    delta = r * r / ((0.5 * nu * r * r + h) * nu * lm)
    G1 = -r * (ep - em) / dl
    G2_11 = (lp * (em - slow) - lm * slow * np.expm1(delta * t)) / dl
    G2_22 = (lp * (ep - fast) - lm * fast * np.expm1(-lp * t)) / dl
    return Expansion(G1, G2_11, G2_22, slow, fast)


# --- field-level propagators -----------------------------------------------

def _lattice_entries(grid: Grid, t: float, nu_bar: float):
    r, inv = grid.unique_radii
    return tuple(e[inv] for e in green_entries(r, t, nu_bar))


def propagate(a: SpectralField, d: SpectralField, t: float, nu_bar: float):
    """Apply the propagator at time t to the pair (a, d)."""
    if a.grid != d.grid:
        raise ValueError("grid mismatch between a and d")
    if a.rank != 0 or d.rank != 0:
        raise ValueError("propagate acts on scalar fields")
    g11, g12, g21, g22 = _lattice_entries(a.grid, t, nu_bar)
    oa, od = kernels.apply_2x2(g11, g12, g21, g22, a.coeffs, d.coeffs)
    real = a.real and d.real
    return (zero_nyquist(SpectralField(a.grid, oa, real)),
            zero_nyquist(SpectralField(a.grid, od, real)))


def heat_semigroup(f: SpectralField, nu: float, t: float) -> SpectralField:
    """e^{nu t Laplacian} f."""
    if t < 0:
        raise ValueError(f"heat time must be non-negative, got {t}")
    if not nu > 0:
        raise ValueError(f"heat coefficient must be positive, got {nu}")
    fac = np.exp(-nu * t * f.grid.xi_norm**2)
    return zero_nyquist(SpectralField(f.grid, fac * f.coeffs, f.real))


def lame_semigroup(v: SpectralField, mu_bar: float, lambda_bar: float, t: float) -> SpectralField:
    """Homogeneous flow of d_t u = mu Lap u + (lambda + mu) grad div u.

    The longitudinal part decays with nu = lambda + 2 mu, the transverse part
    with mu.
    """
    if not (mu_bar > 0 and lambda_bar + 2 * mu_bar > 0):
        raise ValueError("non-elliptic Lamé coefficients: need mu > 0 and lambda + 2 mu > 0")
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    if v.rank != 1:
        raise ValueError("Lamé semigroup acts on vector fields")
    g = v.grid
    k = g.wavevectors
    r2 = g.xi_norm**2
    safe = np.where(r2 > 0, r2, 1.0)
    along = np.sum(k * v.coeffs, axis=0) / safe          # (xi . v) / |xi|^2
    longi = k * along
    trans = v.coeffs - longi
    nu = lambda_bar + 2 * mu_bar
    out = np.exp(-nu * r2 * t) * longi + np.exp(-mu_bar * r2 * t) * trans
    return zero_nyquist(SpectralField(g, out, v.real))


# --- decay probes -----------------------------------------------------------

DECAY_REGIMES = ("low_L2", "low_Lp", "high_G1", "high_G2")
RING_FACTORS = (1.0, 1.25, 1.5)


@dataclass
class DecayReport:
    regime: str
    j: int
    p: float
    times: np.ndarray
    norms: np.ndarray
    fit: FitResult


def _ring_data(grid: Grid, j: int, seed: int) -> SpectralField:
    """A few cosine modes at 2^j q (q in RING_FACTORS) along x_1.

    Amplitudes and phases depend only on the seed, so the data at ring j + 1 is
    the exact dyadic dilation of the data at ring j.
    """
    rng = np.random.default_rng(seed)
    amps = rng.uniform(0.5, 1.5, size=len(RING_FACTORS))
    phases = rng.uniform(0, 2 * np.pi, size=len(RING_FACTORS))
    x = grid.coords[0]
    vals = np.zeros(grid.shape)
    for q, a, ph in zip(RING_FACTORS, amps, phases):
        vals += a * np.cos(2.0**j * q * x + ph)
    return zero_nyquist(forward(grid, vals))


def decay_probe(regime: str, j: int, p: float = 2.0, t_grid=None, nu_bar: float = 1.0,
                N: int = 256, R0: float | None = None, seed: int = 42) -> DecayReport:
    """Fit the exponential decay rate of a propagator piece on ring-j data (1D).

    low_L2 / low_Lp: full propagator on the single mode |xi| = 2^j with a = cos,
    d = 0; default times are multiples of the half-period so the oscillating
    factor drops out.  high_G1 / high_G2: the G1 (off-diagonal) or G2
    (diagonal) piece applied to seeded ring data; the G2 norm is
    ||G2_11 u||_p + ||G2_22 u||_p.
    """
    if regime not in DECAY_REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    R0 = 2.0 / nu_bar if R0 is None else R0
    r0 = 2.0**j
    if regime.startswith("low"):
        if r0 > R0:
            raise ValueError(f"regime/ring mismatch: low regime needs 2^j <= R0 = {R0:g}")
        if regime == "low_L2":
            p = 2.0
        L = 2 * math.pi * max(1.0, 1.0 / r0)
        grid = make_grid(1, N, L)
        x = grid.coords[0]
        a0 = forward(grid, np.cos(r0 * x))
        d0 = SpectralField.zeros(grid)
        if t_grid is None:
            q = 0.25 * nu_bar**2 * r0**4 - r0 * r0
            if q < 0:
                period = math.pi / math.sqrt(-q)
                t_grid = period * np.arange(1, 9)
            else:
                t_grid = np.linspace(0.5, 4.0, 8) / (nu_bar * r0 * r0)
        t_grid = np.asarray(t_grid, dtype=float)
        norms = []
        for t in t_grid:
            a, d = propagate(a0, d0, float(t), nu_bar)
            norms.append(norm_of_samples(a.physical(), p, grid) + norm_of_samples(d.physical(), p, grid)
                         if regime == "low_Lp" else
                         math.sqrt(norm_of_samples(a.physical(), 2, grid) ** 2
                                   + norm_of_samples(d.physical(), 2, grid) ** 2))
    else:
        R = high_frequency_threshold(nu_bar, R0)
        if r0 * min(RING_FACTORS) < R:
            raise ValueError(f"regime/ring mismatch: high regime needs 2^j >= {R:g}")
        if r0 * max(RING_FACTORS) >= N / 2:
            raise ValueError("ring exceeds the grid's Nyquist frequency")
        grid = make_grid(1, N)
        u = _ring_data(grid, j, seed)
        if t_grid is None:
            t_grid = np.linspace(1.0, 5.0, 9) * nu_bar
        t_grid = np.asarray(t_grid, dtype=float)
        r = grid.xi_norm
        mask = r >= R
        norms = []
        for t in t_grid:
            ex = ghat_expansion(r[mask], float(t), nu_bar, R0)
            if regime == "high_G1":
                c = np.zeros_like(u.coeffs)
                c[mask] = ex.G1 * u.coeffs[mask]
                norms.append(norm_of_samples(SpectralField(grid, c).physical(), p, grid))
            else:
                c1 = np.zeros_like(u.coeffs)
                c2 = np.zeros_like(u.coeffs)
                c1[mask] = ex.G2_11 * u.coeffs[mask]
                c2[mask] = ex.G2_22 * u.coeffs[mask]
                norms.append(norm_of_samples(SpectralField(grid, c1).physical(), p, grid)
                             + norm_of_samples(SpectralField(grid, c2).physical(), p, grid))
    norms = np.asarray(norms)
    fit = fit_rate(t_grid, np.log(norms))
    return DecayReport(regime, j, p, t_grid, norms, fit)


def heat_decay_probe(j: int, nu: float = 1.0, N: int = 256, t_grid=None, seed: int = 42):
    """Slope of log ||Delta_j e^{nu t Lap} f||_2 on seeded ring-j data (1D)."""
    grid = make_grid(1, N, 2 * math.pi * max(1.0, 2.0 ** (-j)))
    sys = build_dyadic_system(grid)
    rng = np.random.default_rng(seed)
    c = np.zeros(grid.shape, dtype=complex)
    band = (grid.xi_norm > 0) & (grid.xi_norm < grid.nyquist)
    c[band] = rng.standard_normal(band.sum()) + 1j * rng.standard_normal(band.sum())
    c = 0.5 * (c + np.conj(np.roll(c[::-1], 1)))
    f = delta_j(sys, SpectralField(grid, c), j)
    if t_grid is None:
        t_grid = np.linspace(0.0, 2.0, 9) / (nu * 4.0**j)
    t_grid = np.asarray(t_grid, dtype=float)
    norms = np.array([math.sqrt(grid.L * np.sum(np.abs(delta_j(sys, heat_semigroup(f, nu, t), j).coeffs) ** 2))
                      for t in t_grid])
    return t_grid, norms, fit_rate(t_grid, np.log(norms))


def write_decay_csv(reports, sink) -> None:
    """Columns regime, j, t, norm, fitted_slope, fitted_intercept, r_squared."""
    own = isinstance(sink, str) or hasattr(sink, "__fspath__")
    fh = open(sink, "w", newline="") if own else sink
    try:
        w = csv.writer(fh)
        w.writerow(["regime", "j", "t", "norm", "fitted_slope", "fitted_intercept", "r_squared"])
        for rep in reports:
            for t, v in zip(rep.times, rep.norms):
                w.writerow([rep.regime, rep.j, "%.17g" % t, "%.17g" % v, "%.17g" % rep.fit.slope,
                            "%.17g" % rep.fit.intercept, "%.17g" % rep.fit.r_squared])
    finally:
        if own:
            fh.close()
