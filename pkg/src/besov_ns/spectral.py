"""Periodic grids, spectral fields, Fourier multipliers and Lebesgue norms.

Conventions
-----------
The Fourier transform is f^(xi) = int e^{-i x.xi} f dx, so a derivative d/dx_j
acts as multiplication by i*xi_j.  Discrete coefficients are stored
"unitary-in-mean": ``coeffs = fftn(samples) / N**n``, so ``cos(x_1)`` has the
value 1/2 at m = +-e_1 and a constant field c has coefficient c at m = 0.
Coefficient arrays are kept in native FFT ordering, with the component axes
(if any) in front of the n lattice axes.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft


def fft_workers() -> int:
    """Worker count for scipy.fft, from ``BESOV_NS_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("BESOV_NS_THREADS", "1")))
    except ValueError:
        return 1


def _is_power_of_two(k: int) -> bool:
    return k > 0 and (k & (k - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with N points per axis and period L."""

    n: int
    N: int
    L: float = 2 * math.pi

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"dimension n must be 1, 2 or 3, got {self.n}")
        if not isinstance(self.N, (int, np.integer)) or not _is_power_of_two(int(self.N)) or self.N < 8:
            raise ValueError(f"N must be a power of two and at least 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"period L must be positive, got {self.L}")

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def spacing(self) -> float:
        """Dual lattice spacing 2*pi/L."""
        return 2 * math.pi / self.L

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.dx**self.n

    @property
    def nyquist(self) -> float:
        """Magnitude of the Nyquist frequency along one axis."""
        return self.spacing * self.N / 2

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode numbers, shape (n, N, ..., N)."""
        m1 = np.fft.fftfreq(self.N, 1.0 / self.N).astype(int)
        return np.stack(np.meshgrid(*([m1] * self.n), indexing="ij"))

    @cached_property
    def wavevectors(self) -> np.ndarray:
        """Frequencies xi = (2 pi / L) m, shape (n, N, ..., N)."""
        return self.spacing * self.modes

    @cached_property
    def xi_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.wavevectors**2, axis=0))

    @cached_property
    def keep_mask(self) -> np.ndarray:
        """False on every lattice point carrying a Nyquist index m_i = -N/2."""
        return np.all(self.modes != -self.N // 2, axis=0)

    @cached_property
    def coords(self) -> np.ndarray:
        """Physical sample points, shape (n, N, ..., N)."""
        x1 = np.arange(self.N) * self.dx
        return np.stack(np.meshgrid(*([x1] * self.n), indexing="ij"))

    @cached_property
    def unique_radii(self):
        """(radii, inverse) so that ``radii[inverse] == xi_norm``."""
        r, inv = np.unique(self.xi_norm.ravel(), return_inverse=True)
        return r, inv.reshape(self.shape)

    @cached_property
    def j_range(self) -> tuple[int, int]:
        """Dyadic index range of the Littlewood-Paley blocks on this lattice.

        j_min is chosen so that the low-pass ball 2^j_min * 4/3 lies strictly
        below the first nonzero frequency; j_max is the largest j whose ring
        2^j * [3/4, 8/3] reaches below the largest lattice |xi| (corners
        included), so the blocks cover every nonzero frequency.
        """
        j_min = math.ceil(math.log2(0.75 * self.spacing)) - 1
        xi_top = float(self.xi_norm.max())
        j_max = math.floor(math.log2(xi_top / 0.75))
        if 2.0**j_max * 0.75 >= xi_top:
            j_max -= 1
        return j_min, j_max


def make_grid(n: int, N: int, L: float = 2 * math.pi) -> Grid:
    return Grid(n, N, float(L))


def _component_shape(grid: Grid, rank: int) -> tuple:
    return ((), (grid.n,), (grid.n, grid.n))[rank]


@dataclass
class SpectralField:
    """Fourier coefficients of a scalar, vector or matrix field.

    ``coeffs`` has shape ``component_shape + grid.shape``.  ``real`` records
    whether the represented physical field is real (Hermitian coefficients).
    """

    grid: Grid
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        extra = self.coeffs.ndim - self.grid.n
        if extra not in (0, 1, 2) or self.coeffs.shape[extra:] != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )
        if self.coeffs.shape[:extra] != _component_shape(self.grid, extra):
            raise ValueError(f"component shape {self.coeffs.shape[:extra]} invalid for n={self.grid.n}")

    @property
    def rank(self) -> int:
        return self.coeffs.ndim - self.grid.n

    @classmethod
    def zeros(cls, grid: Grid, rank: int = 0) -> "SpectralField":
        return cls(grid, np.zeros(_component_shape(grid, rank) + grid.shape, dtype=np.complex128))

    @classmethod
    def from_physical(cls, grid: Grid, values) -> "SpectralField":
        return forward(grid, values)

    def physical(self) -> np.ndarray:
        return inverse(self)

    @property
    def mean(self):
        """Spatial average (the zero-mode coefficient), per component."""
        idx = (Ellipsis,) + (0,) * self.grid.n
        val = self.coeffs[idx]
        return val.real if self.real else val

    def component(self, *index) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs[index], self.real)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), self.real)

    def _check(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        if other.coeffs.shape != self.coeffs.shape:
            raise ValueError("rank mismatch")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.real and other.real)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.real)

    def __mul__(self, alpha):
        is_real = self.real and np.isrealobj(alpha)
        return SpectralField(self.grid, self.coeffs * alpha, is_real)

    __rmul__ = __mul__


def forward(grid: Grid, values) -> SpectralField:
    """Physical samples (components first) to coefficients."""
    values = np.asarray(values)
    if values.shape[values.ndim - grid.n:] != grid.shape or values.ndim - grid.n not in (0, 1, 2):
        raise ValueError(f"sample shape {values.shape} does not match grid {grid.shape}")
    axes = tuple(range(values.ndim - grid.n, values.ndim))
    c = sfft.fftn(values, axes=axes, norm="forward", workers=fft_workers())
    return SpectralField(grid, c, real=np.isrealobj(values))


def inverse(sf: SpectralField) -> np.ndarray:
    """Coefficients to physical samples; real fields return real arrays."""
    n = sf.grid.n
    axes = tuple(range(sf.coeffs.ndim - n, sf.coeffs.ndim))
    out = sfft.ifftn(sf.coeffs, axes=axes, norm="forward", workers=fft_workers())
    return out.real.copy() if sf.real else out


def transform(field, direction: str, grid: Grid | None = None):
    """Dispatch helper: ``direction`` is "forward" (needs ``grid``) or "inverse"."""
    if direction == "forward":
        if grid is None:
            raise ValueError("forward transform needs a grid")
        return forward(grid, field)
    if direction == "inverse":
        return inverse(field)
    raise ValueError(f"unknown direction {direction!r}")


def zero_nyquist(sf: SpectralField) -> SpectralField:
    return SpectralField(sf.grid, sf.coeffs * sf.grid.keep_mask, sf.real)


@dataclass(frozen=True)
class Multiplier:
    """A Fourier symbol on the dual lattice.

    ``symbol(grid)`` returns either a scalar array of shape ``grid.shape`` or a
    matrix array of shape ``(n, n) + grid.shape``.  ``zero_mode`` overrides the
    value at xi = 0 (None keeps whatever the symbol gives there).
    """

    symbol: Callable[[Grid], np.ndarray]
    zero_mode: float | None = None
    name: str = "multiplier"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def values(self, grid: Grid) -> np.ndarray:
        if grid not in self._cache:
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.array(self.symbol(grid), dtype=np.complex128)
            if self.zero_mode is not None:
                vals[(Ellipsis,) + (0,) * grid.n] = self.zero_mode
            self._cache[grid] = vals
        return self._cache[grid]

    def is_matrix(self, grid: Grid) -> bool:
        return self.values(grid).ndim == grid.n + 2


def apply_multiplier(sf: SpectralField, m: Multiplier) -> SpectralField:
    vals = m.values(sf.grid)
    n = sf.grid.n
    if vals.ndim == n:
        out = vals * sf.coeffs
    elif vals.ndim == n + 2:
        if sf.rank != 1:
            raise ValueError(f"rank mismatch: matrix multiplier needs a vector field, got rank {sf.rank}")
        out = np.einsum("ij...,j...->i...", vals, sf.coeffs)
    else:
        raise ValueError("rank mismatch: malformed multiplier symbol")
    real = sf.real and np.allclose(vals.imag, 0.0)
    return zero_nyquist(SpectralField(sf.grid, out, real))


def lambda_power(s: float) -> Multiplier:
    """|xi|^s; the zero mode is annihilated for s != 0 and kept for s = 0."""
    zm = 1.0 if s == 0 else 0.0
    return Multiplier(lambda g: g.xi_norm ** float(s), zero_mode=zm, name=f"Lambda^{s}")


def heat_multiplier(nu: float, t: float) -> Multiplier:
    return Multiplier(lambda g: np.exp(-nu * t * g.xi_norm**2), name="heat")


# --- differential operators ------------------------------------------------

def grad(sf: SpectralField) -> SpectralField:
    if sf.rank != 0:
        raise ValueError("rank mismatch: grad expects a scalar field")
    k = sf.grid.wavevectors
    return zero_nyquist(SpectralField(sf.grid, 1j * k * sf.coeffs, sf.real))


def div(sf: SpectralField) -> SpectralField:
    """Divergence of a vector, or row divergence (div W)_i = d_j W_ij of a matrix."""
    k = sf.grid.wavevectors
    if sf.rank == 1:
        out = np.sum(1j * k * sf.coeffs, axis=0)
    elif sf.rank == 2:
        out = np.sum(1j * k[None] * sf.coeffs, axis=1)
    else:
        raise ValueError("rank mismatch: div expects a vector or matrix field")
    return zero_nyquist(SpectralField(sf.grid, out, sf.real))


def curl(sf: SpectralField) -> SpectralField:
    """(curl v)_ij = d_j v_i - d_i v_j."""
    if sf.rank != 1:
        raise ValueError("rank mismatch: curl expects a vector field")
    k = sf.grid.wavevectors
    dv = 1j * k[None, :] * sf.coeffs[:, None]  # dv[i, j] = d_j v_i
    out = dv - np.swapaxes(dv, 0, 1)
    return zero_nyquist(SpectralField(sf.grid, out, sf.real))


def laplacian(sf: SpectralField) -> SpectralField:
    r2 = sf.grid.xi_norm**2
    return zero_nyquist(SpectralField(sf.grid, -r2 * sf.coeffs, sf.real))


def lam(sf: SpectralField, s: float = 1.0) -> SpectralField:
    """Lambda^s = |D|^s with the mean annihilated when s != 0."""
    return apply_multiplier(sf, lambda_power(s))


def differential(sf: SpectralField, kind: str, s: float | None = None) -> SpectralField:
    if kind == "grad":
        return grad(sf)
    if kind == "div":
        return div(sf)
    if kind == "curl":
        return curl(sf)
    if kind == "laplacian":
        return laplacian(sf)
    if kind == "lambda":
        return lam(sf, 1.0 if s is None else s)
    raise ValueError(f"unknown differential kind {kind!r}")


# --- norms -----------------------------------------------------------------

def pointwise_magnitude(values: np.ndarray, n: int) -> np.ndarray:
    """|f(x)| with the Euclidean (Frobenius) norm over component axes."""
    extra = values.ndim - n
    if extra == 0:
        return np.abs(values)
    axes = tuple(range(extra))
    return np.sqrt(np.sum(np.abs(values) ** 2, axis=axes))


def lebesgue_norm(field, p: float, grid: Grid | None = None) -> float:
    """Discrete L^p norm with cell quadrature (L/N)^n * sum.

    ``field`` is a SpectralField or a physical sample array (then ``grid`` is
    required).  Vector and matrix fields use the pointwise Euclidean magnitude.
    """
    if p < 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    if isinstance(field, SpectralField):
        grid = field.grid
        values = field.physical()
    else:
        if grid is None:
            raise ValueError("physical samples need a grid")
        values = np.asarray(field)
    return norm_of_samples(values, p, grid)


def norm_of_samples(values: np.ndarray, p: float, grid: Grid) -> float:
    mag = pointwise_magnitude(values, grid.n)
    if math.isinf(p):
        return float(mag.max()) if mag.size else 0.0
    if p == 2:
        return float(math.sqrt(grid.cell_volume * np.sum(mag * mag)))
    top = float(mag.max())
    if top == 0.0:
        return 0.0
    # scale first so large p does not overflow
    return top * float((grid.cell_volume * np.sum((mag / top) ** p)) ** (1.0 / p))


def l2_norm_spectral(sf: SpectralField) -> float:
    """L^2 norm via Parseval: L^n * sum |c|^2."""
    return float(math.sqrt(sf.grid.L**sf.grid.n * np.sum(np.abs(sf.coeffs) ** 2)))
