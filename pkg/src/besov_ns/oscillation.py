"""Highly oscillating data and the decay of their negative-index hybrid norms.

phi_eps = e^{i x_1 / eps} phi is large in classical critical norms but its
B^{n/2-1, n/p-1}_{2,p} norm decays like eps^{1 - n/p} when p > n.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .besov import HybridParams, hybrid_norm, mean_free
from .experiments.fitting import FitResult, fit_rate
from .lp import build_dyadic_system
from .spectral import Grid, SpectralField, grad

OSCILLATION_KINDS = ("scalar_modulated", "shear_velocity", "planar_shear")
ENVELOPE_WIDTH = 4.0
# The low-frequency region must sit below the oscillation band for every swept
# eps; at eps = 1/4 the band spans |xi| in [1, 7], so the threshold is 1/2.
SWEEP_THRESHOLD = 0.5


def envelope(grid: Grid) -> SpectralField:
    """Periodic bump exp(-4 sum sin^2(pi x_i / L)) with its mean removed."""
    x = grid.coords
    bump = np.exp(-ENVELOPE_WIDTH * np.sum(np.sin(np.pi * x / grid.L) ** 2, axis=0))
    return mean_free(SpectralField.from_physical(grid, bump - bump.mean()))


def snap_frequency(grid: Grid, epsilon: float) -> tuple[int, float]:
    """Nearest lattice index m to 1/eps and the snapped eps = L / (2 pi m)."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    base = 2 * math.pi / grid.L
    m = int(round(1.0 / (epsilon * base)))
    if m > grid.N // 4:
        raise ValueError(f"under-resolved oscillation: 1/eps = {1 / epsilon:g} exceeds half the "
                         f"Nyquist frequency {grid.nyquist / 2:g}")
    return m, (math.inf if m == 0 else 1.0 / (m * base))


@dataclass
class OscillatingDatum:
    kind: str
    epsilon: float            # snapped value
    mode: int                 # lattice index of 1/eps
    field: SpectralField


def make_oscillating(grid: Grid, kind: str, epsilon: float) -> OscillatingDatum:
    """Build one oscillating datum.

    scalar_modulated: e^{i x_1/eps} phi (complex scalar).
    shear_velocity:   sin(x_3/eps) (-d_2 phi, d_1 phi, 0), n = 3, divergence-free.
    planar_shear:     sin(x_1/eps) phi e_2, n = 2.
    """
    if kind not in OSCILLATION_KINDS:
        raise ValueError(f"unknown oscillation kind {kind!r}; expected one of {OSCILLATION_KINDS}")
    m, eps = snap_frequency(grid, epsilon)
    phi = envelope(grid)
    x = grid.coords
    k = 2 * math.pi * m / grid.L
    if kind == "scalar_modulated":
        vals = np.exp(1j * k * x[0]) * phi.physical()
        return OscillatingDatum(kind, eps, m, SpectralField.from_physical(grid, vals))
    if kind == "shear_velocity":
        if grid.n != 3:
            raise ValueError("shear_velocity needs n = 3")
        dphi = grad(phi).physical()
        osc = np.sin(k * x[2])
        vals = np.stack([-osc * dphi[1], osc * dphi[0], np.zeros(grid.shape)])
        return OscillatingDatum(kind, eps, m, SpectralField.from_physical(grid, vals))
    if grid.n != 2:
        raise ValueError("planar_shear needs n = 2")
    vals = np.zeros((2,) + grid.shape)
    vals[1] = np.sin(k * x[0]) * phi.physical()
    return OscillatingDatum(kind, eps, m, SpectralField.from_physical(grid, vals))


@dataclass
class OscillationReport:
    kind: str
    n: int
    p: float
    epsilons: np.ndarray
    norms: np.ndarray
    fit: FitResult
    expected_slope: float

    @property
    def slope_error(self) -> float:
        return abs(self.fit.slope - self.expected_slope)


def _sweep(grid: Grid, kind: str, p: float, eps_list, R0: float) -> OscillationReport:
    n = grid.n
    sys = build_dyadic_system(grid)
    hp = HybridParams(n / 2 - 1, n / p - 1, p, R0)
    eps, norms = [], []
    for e in eps_list:
        datum = make_oscillating(grid, kind, e)
        eps.append(datum.epsilon)
        norms.append(hybrid_norm(sys, mean_free(datum.field), hp))
    eps, norms = np.array(eps), np.array(norms)
    fit = fit_rate(np.log(eps), np.log(norms))
    return OscillationReport(kind, n, p, eps, norms, fit, 1 - n / p)


def oscillation_scaling_experiment(grid: Grid, kind: str = "scalar_modulated", p: float = 4.0,
                                   eps_list=None, R0: float = SWEEP_THRESHOLD) -> OscillationReport:
    """Fit log ||phi_eps|| against log eps; the expected slope is 1 - n/p > 0."""
    if p <= grid.n:
        raise ValueError("exponent nonpositive, scaling regime is p > n")
    eps_list = [2.0**-k for k in range(2, 6)] if eps_list is None else eps_list
    return _sweep(grid, kind, p, eps_list, R0)


def unweighted_control(grid: Grid, kind: str = "scalar_modulated", eps_list=None,
                       R0: float = SWEEP_THRESHOLD) -> OscillationReport:
    """The same sweep with p = 2, where no decay is expected (slope 0)."""
    eps_list = [2.0**-k for k in range(2, 6)] if eps_list is None else eps_list
    return _sweep(grid, kind, 2.0, eps_list, R0)


def write_oscillation_csv(report: OscillationReport, sink) -> None:
    """Columns epsilon, norm, log_epsilon, log_norm."""
    own = isinstance(sink, str) or hasattr(sink, "__fspath__")
    fh = open(sink, "w", newline="") if own else sink
    try:
        w = csv.writer(fh)
        w.writerow(["epsilon", "norm", "log_epsilon", "log_norm"])
        for e, v in zip(report.epsilons, report.norms):
            w.writerow(["%.17g" % e, "%.17g" % v, "%.17g" % math.log(e), "%.17g" % math.log(v)])
    finally:
        if own:
            fh.close()
