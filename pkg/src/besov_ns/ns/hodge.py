"""Split of a velocity into d = Lambda^-1 div v, Omega = Lambda^-1 curl v and its mean."""
from __future__ import annotations

import numpy as np

from ..spectral import SpectralField, zero_nyquist


def _inv_radius(grid):
    r = grid.xi_norm
    return np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), 0.0)


def split_coeffs(grid, v: np.ndarray):
    k = grid.wavevectors
    inv = _inv_radius(grid)
    d = inv * np.sum(1j * k * v, axis=0)
    dv = 1j * k[None, :] * v[:, None]          # dv[i, j] = d_j v_i
    om = inv * (dv - np.swapaxes(dv, 0, 1))
    mean = v[(slice(None),) + (0,) * grid.n].real.copy()
    return d * grid.keep_mask, om * grid.keep_mask, mean


def reconstruct_coeffs(grid, d: np.ndarray, om: np.ndarray, mean_v) -> np.ndarray:
    """v = -Lambda^-1 grad d - Lambda^-1 div Omega + mean_v."""
    k = grid.wavevectors
    inv = _inv_radius(grid)
    v = -inv * (1j * k * d) - inv * np.sum(1j * k[None] * om, axis=1)
    v[(slice(None),) + (0,) * grid.n] = np.asarray(mean_v, dtype=float)
    return v * grid.keep_mask


def hodge_split(v: SpectralField):
    """Return (d, Omega, mean_v)."""
    if v.rank != 1:
        raise ValueError("hodge_split expects a vector field")
    d, om, mean = split_coeffs(v.grid, v.coeffs)
    return SpectralField(v.grid, d, v.real), SpectralField(v.grid, om, v.real), mean


def hodge_reconstruct(d: SpectralField, omega: SpectralField, mean_v=None) -> SpectralField:
    g = d.grid
    if d.rank != 0 or omega.rank != 2 or omega.grid != g:
        raise ValueError("hodge_reconstruct expects a scalar d and a matrix Omega on one grid")
    scale = 1e-12 * max(1.0, float(np.abs(d.coeffs).max()), float(np.abs(omega.coeffs).max()))
    if abs(d.coeffs[(0,) * g.n]) > scale or np.any(np.abs(omega.coeffs[(Ellipsis,) + (0,) * g.n]) > scale):
        raise ValueError("d and Omega must be mean-zero")
    mean_v = np.zeros(g.n) if mean_v is None else mean_v
    v = reconstruct_coeffs(g, d.coeffs, omega.coeffs, mean_v)
    return zero_nyquist(SpectralField(g, v, d.real and omega.real))
