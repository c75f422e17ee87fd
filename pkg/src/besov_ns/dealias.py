"""Zero-padded (3/2-rule) evaluation of pointwise products."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .spectral import Grid, SpectralField, fft_workers


@lru_cache(maxsize=16)
def _index_maps(N: int, M: int):
    # kept modes are -N/2+1 .. N/2-1; the Nyquist index is dropped
    half = N // 2
    src = np.concatenate([np.arange(0, half), np.arange(half + 1, N)])
    dst = np.concatenate([np.arange(0, half), np.arange(M - half + 1, M)])
    return src, dst


class Dealiaser:
    """Moves fields between the N-grid spectrum and physical samples on the padded grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.M = 3 * grid.N // 2
        self.src, self.dst = _index_maps(grid.N, self.M)

    @property
    def padded_shape(self) -> tuple:
        return (self.M,) * self.grid.n

    def to_padded(self, sf: SpectralField) -> np.ndarray:
        out = self.coeffs_to_padded(sf.coeffs)
        return out.real.copy() if sf.real else out

    def from_padded(self, values: np.ndarray) -> SpectralField:
        return SpectralField(self.grid, self.padded_to_coeffs(values), real=np.isrealobj(values))

    def coeffs_to_padded(self, coeffs: np.ndarray) -> np.ndarray:
        """Complex samples on the padded grid; leading axes are batched."""
        n = self.grid.n
        lead = coeffs.shape[: coeffs.ndim - n]
        big = np.zeros(lead + self.padded_shape, dtype=np.complex128)
        big[(Ellipsis,) + np.ix_(*([self.dst] * n))] = coeffs[(Ellipsis,) + np.ix_(*([self.src] * n))]
        axes = tuple(range(len(lead), len(lead) + n))
        return sfft.ifftn(big, axes=axes, norm="forward", workers=fft_workers())

    def padded_to_coeffs(self, values: np.ndarray) -> np.ndarray:
        n = self.grid.n
        lead = values.shape[: values.ndim - n]
        axes = tuple(range(len(lead), len(lead) + n))
        big = sfft.fftn(values, axes=axes, norm="forward", workers=fft_workers())
        c = np.zeros(lead + self.grid.shape, dtype=np.complex128)
        c[(Ellipsis,) + np.ix_(*([self.src] * n))] = big[(Ellipsis,) + np.ix_(*([self.dst] * n))]
        return c

    def product(self, f: SpectralField, g: SpectralField) -> SpectralField:
        """Dealiased pointwise product of two scalar fields."""
        return self.from_padded(self.to_padded(f) * self.to_padded(g))


_CACHE: dict = {}


def dealiaser(grid: Grid) -> Dealiaser:
    if grid not in _CACHE:
        _CACHE[grid] = Dealiaser(grid)
    return _CACHE[grid]


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    return dealiaser(f.grid).product(f, g)
