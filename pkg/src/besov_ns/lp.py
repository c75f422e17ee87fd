"""Littlewood-Paley dyadic blocks on the periodic lattice."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .spectral import Grid, SpectralField, norm_of_samples, zero_nyquist

BALL_OUTER = 4.0 / 3.0
RING_INNER = 0.75
RING_OUTER = 8.0 / 3.0


@dataclass(frozen=True)
class ProfileParams:
    """Shape of the low-pass profile: chi is flat on |xi| <= flat_radius."""

    flat_radius: float = 0.75

    def clamped(self) -> "ProfileParams":
        # the ring identities need the flat part to contain 3/4 and stay below 4/3
        return ProfileParams(min(max(self.flat_radius, 0.75), 1.25))


@dataclass(frozen=True)
class DyadicSystem:
    grid: Grid
    profile: ProfileParams = ProfileParams()
    _symbols: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def j_min(self) -> int:
        return self.grid.j_range[0]

    @property
    def j_max(self) -> int:
        return self.grid.j_range[1]

    @property
    def j_values(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def chi(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        width = BALL_OUTER - self.profile.flat_radius
        return kernels.smooth_ramp((BALL_OUTER - r) / width)

    def phi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.chi(r / 2.0) - self.chi(r)

    def block_symbol(self, j: int) -> np.ndarray:
        key = ("phi", j)
        if key not in self._symbols:
            self._symbols[key] = self.phi(self.grid.xi_norm * 2.0 ** (-j))
        return self._symbols[key]

    def lowpass_symbol(self, j: int) -> np.ndarray:
        key = ("chi", j)
        if key not in self._symbols:
            self._symbols[key] = self.chi(self.grid.xi_norm * 2.0 ** (-j))
        return self._symbols[key]

    def is_truncated(self, j: int) -> bool:
        """True if the ring at j extends past the Nyquist frequency."""
        return 2.0**j * RING_OUTER > self.grid.nyquist

    def check_j(self, j: int):
        if not self.j_min <= j <= self.j_max:
            raise ValueError(f"block index j={j} outside range [{self.j_min}, {self.j_max}]")


def build_dyadic_system(grid: Grid, profile_params: ProfileParams | None = None) -> DyadicSystem:
    params = (profile_params or ProfileParams()).clamped()
    return DyadicSystem(grid, params)


def delta_j(sys: DyadicSystem, f: SpectralField, j: int) -> SpectralField:
    sys.check_j(j)
    return zero_nyquist(SpectralField(f.grid, sys.block_symbol(j) * f.coeffs, f.real))


def s_j(sys: DyadicSystem, f: SpectralField, j: int) -> SpectralField:
    """Low-pass chi(2^-j D) f; j is clamped to [j_min, j_max + 1]."""
    j = min(max(j, sys.j_min), sys.j_max + 1)
    return zero_nyquist(SpectralField(f.grid, sys.lowpass_symbol(j) * f.coeffs, f.real))


@dataclass
class LPDecomposition:
    blocks: list  # (j, SpectralField)
    lowpass_floor: SpectralField

    def reconstruct(self) -> SpectralField:
        out = self.lowpass_floor.copy()
        for _, b in self.blocks:
            out = out + b
        return out


def decompose(sys: DyadicSystem, f: SpectralField) -> LPDecomposition:
    blocks = [(j, delta_j(sys, f, j)) for j in sys.j_values]
    return LPDecomposition(blocks, s_j(sys, f, sys.j_min))


def partition_error(sys: DyadicSystem) -> float:
    """max |sum_j phi(2^-j xi) - 1| over the nonzero lattice frequencies."""
    total = sum(sys.block_symbol(j) for j in sys.j_values)
    nz = sys.grid.xi_norm > 0
    return float(np.max(np.abs(total[nz] - 1.0)))


def orthogonality_error(sys: DyadicSystem) -> float:
    """max |phi_j(xi) phi_k(xi)| over the lattice and all pairs with |j - k| >= 2."""
    js = list(sys.j_values)
    syms = {j: sys.block_symbol(j) for j in js}
    worst = 0.0
    for a in js:
        for b in js:
            if b - a >= 2:
                worst = max(worst, float(np.max(np.abs(syms[a] * syms[b]))))
    return worst


def uncovered_energy(sys: DyadicSystem, f: SpectralField) -> float:
    """L^2 norm of the part of f not captured by mean + blocks (Nyquist, roundoff)."""
    dec = decompose(sys, f)
    rest = f.coeffs - dec.reconstruct().coeffs
    return float(math.sqrt(f.grid.L**f.grid.n * np.sum(np.abs(rest) ** 2)))


@dataclass
class BernsteinReport:
    j: int
    p: float
    q: float
    order: tuple
    lhs: float
    scale: float
    ratio: float


def bernstein_probe(sys: DyadicSystem, f: SpectralField, j: int, p: float, q: float,
                    gamma=None) -> BernsteinReport:
    """Measure ||d^gamma f||_q / (2^{j|gamma| + jn(1/p - 1/q)} ||f||_p).

    ``gamma`` is a multi-index (tuple of n non-negative ints); None means 0.
    The caller supplies f already localized to ring j.
    """
    if p > q:
        raise ValueError(f"Bernstein probe needs p <= q, got p={p}, q={q}")
    g = f.grid
    gamma = tuple(gamma) if gamma is not None else (0,) * g.n
    if len(gamma) != g.n or any(k < 0 for k in gamma):
        raise ValueError("gamma must be a multi-index of length n")
    sym = np.ones(g.shape, dtype=np.complex128)
    for axis, k in enumerate(gamma):
        sym = sym * (1j * g.wavevectors[axis]) ** k
    deriv = zero_nyquist(SpectralField(g, sym * f.coeffs, f.real))
    lhs = norm_of_samples(deriv.physical().real, q, g)
    order = sum(gamma)
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    scale = 2.0 ** (j * order + j * g.n * (inv_p - inv_q)) * norm_of_samples(f.physical().real, p, g)
    ratio = lhs / scale if scale > 0 else 0.0
    return BernsteinReport(j, p, q, gamma, lhs, scale, ratio)


def write_profile_csv(sys: DyadicSystem, sink, samples: int = 401) -> None:
    """Columns xi, chi(xi), phi(xi) on [0, 3]."""
    r = np.linspace(0.0, 3.0, samples)
    rows = zip(r, sys.chi(r), sys.phi(r))
    own = isinstance(sink, str) or hasattr(sink, "__fspath__")
    fh = open(sink, "w", newline="") if own else sink
    try:
        w = csv.writer(fh)
        w.writerow(["xi", "chi", "phi"])
        for row in rows:
            w.writerow(["%.17g" % v for v in row])
    finally:
        if own:
            fh.close()
