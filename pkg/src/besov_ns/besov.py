"""Besov, hybrid Besov and Chemin-Lerner norms built from dyadic block norms."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .lp import DyadicSystem, delta_j
from .spectral import SpectralField, norm_of_samples, zero_nyquist


class MeanModeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class HybridParams:
    """Low blocks (2^j <= R0) weigh 2^{js} ||.||_2, high blocks 2^{j sigma} ||.||_p."""

    s: float
    sigma: float
    p: float = 2.0
    R0: float = 2.0

    def __post_init__(self):
        if not self.p >= 2:
            raise ValueError(f"hybrid norm needs p >= 2, got {self.p}")
        if not self.R0 > 0:
            raise ValueError(f"threshold R0 must be positive, got {self.R0}")

    def is_low(self, j) -> np.ndarray:
        return 2.0 ** np.asarray(j, dtype=float) <= self.R0


def _drop_mean(f: SpectralField) -> SpectralField:
    mean = np.atleast_1d(np.abs(f.mean))
    scale = max(1.0, float(np.abs(f.coeffs).max()))
    if np.any(mean > 1e-14 * scale):
        warnings.warn("field has a nonzero mean; the mean mode is excluded from the norm",
                      MeanModeWarning, stacklevel=3)
    c = f.coeffs.copy()
    c[(Ellipsis,) + (0,) * f.grid.n] = 0.0
    return SpectralField(f.grid, c, f.real)


def block_norms(sys: DyadicSystem, f: SpectralField, ps) -> tuple[np.ndarray, dict]:
    """Return (js, {p: array of ||Delta_j f||_p}) for every block index."""
    js = np.array(list(sys.j_values))
    out = {p: np.empty(len(js)) for p in ps}
    for i, j in enumerate(js):
        vals = delta_j(sys, f, int(j)).physical()
        for p in ps:
            out[p][i] = norm_of_samples(vals, p, f.grid)
    return js, out


def _lq(values: np.ndarray, q: float) -> float:
    if math.isinf(q):
        return float(values.max()) if values.size else 0.0
    return float(np.sum(values**q) ** (1.0 / q))


def besov_norm(sys: DyadicSystem, f: SpectralField, s: float, p: float, q: float) -> float:
    """l^q over j of 2^{js} ||Delta_j f||_p."""
    if p < 1 or q < 1:
        raise ValueError("Besov norm needs p, q >= 1")
    f = _drop_mean(f)
    js, norms = block_norms(sys, f, [p])
    return _lq(2.0 ** (s * js) * norms[p], q)


def hybrid_weights(js, hp: HybridParams) -> tuple[np.ndarray, np.ndarray]:
    js = np.asarray(js, dtype=float)
    low = hp.is_low(js)
    w = np.where(low, 2.0 ** (hp.s * js), 2.0 ** (hp.sigma * js))
    return w, low


def hybrid_norm(sys: DyadicSystem, f: SpectralField, hp: HybridParams) -> float:
    f = _drop_mean(f)
    js, norms = block_norms(sys, f, sorted({2.0, hp.p}))
    w, low = hybrid_weights(js, hp)
    return float(np.sum(np.where(low, w * norms[2.0], w * norms[hp.p])))


def hybrid_parts(sys: DyadicSystem, f: SpectralField, hp: HybridParams) -> tuple[float, float]:
    """(low-frequency sum, high-frequency sum) of the hybrid norm."""
    f = _drop_mean(f)
    js, norms = block_norms(sys, f, sorted({2.0, hp.p}))
    w, low = hybrid_weights(js, hp)
    return float(np.sum((w * norms[2.0])[low])), float(np.sum((w * norms[hp.p])[~low]))


@dataclass
class NormSeries:
    """Per-block L^2 and L^p norms of a field sampled at increasing times."""

    js: np.ndarray
    p: float
    times: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    lp: list = field(default_factory=list)

    @classmethod
    def for_system(cls, sys: DyadicSystem, p: float) -> "NormSeries":
        return cls(np.array(list(sys.j_values)), float(p))

    def append(self, sys: DyadicSystem, t: float, f: SpectralField) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("sample times must be strictly increasing")
        c = f.coeffs.copy()
        c[(Ellipsis,) + (0,) * f.grid.n] = 0.0
        js, norms = block_norms(sys, SpectralField(f.grid, c, f.real), sorted({2.0, self.p}))
        self.times.append(float(t))
        self.l2.append(norms[2.0])
        self.lp.append(norms[self.p])

    def append_norms(self, t: float, l2, lp) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("sample times must be strictly increasing")
        self.times.append(float(t))
        self.l2.append(np.asarray(l2, dtype=float))
        self.lp.append(np.asarray(lp, dtype=float))

    def __len__(self):
        return len(self.times)

    def arrays(self):
        return np.asarray(self.times), np.vstack(self.l2), np.vstack(self.lp)

    def _blockwise(self, hp: HybridParams) -> tuple[np.ndarray, np.ndarray]:
        if not self.times:
            raise ValueError("empty norm series")
        if hp.p != self.p:
            raise ValueError(f"series holds L^{self.p} samples, norm asks for L^{hp.p}")
        t, l2, lp = self.arrays()
        w, low = hybrid_weights(self.js, hp)
        return t, np.where(low[None, :], l2, lp) * w[None, :]

    def running(self, r: float, hp: HybridParams) -> np.ndarray:
        """Chemin-Lerner norm on [t_0, t_k] for every sample index k."""
        t, b = self._blockwise(hp)
        if math.isinf(r):
            return np.maximum.accumulate(b, axis=0).sum(axis=1)
        integ = cumulative_trapezoid(b**r, t, axis=0, initial=0.0)
        return (integ ** (1.0 / r)).sum(axis=1)


def chemin_lerner_norm(series: NormSeries, r: float, hp: HybridParams) -> float:
    """Per-block time L^r (trapezoid; max for r = inf), then the hybrid sum."""
    if r < 1:
        raise ValueError("time exponent r must be >= 1")
    t, b = series._blockwise(hp)
    if math.isinf(r):
        return float(b.max(axis=0).sum())
    if len(t) == 1:
        return 0.0
    return float((trapezoid(b**r, t, axis=0) ** (1.0 / r)).sum())


@dataclass
class EmbeddingReport:
    sup_norm: float
    hybrid_norm: float          # ||f|| in B^{n/2, n/p}_{2,p}
    sup_ratio: float            # sup_norm / hybrid_norm, the measured constant
    interpolation: list         # (theta, lhs, rhs) with lhs <= rhs expected


def embedding_probe(sys: DyadicSystem, f: SpectralField, p: float = 4.0,
                    s_pair=(0.0, 1.0), sigma_pair=(-0.5, 0.5), R0: float = 2.0,
                    thetas=(0.25, 0.5, 0.75)) -> EmbeddingReport:
    """Both sides of the L^infinity embedding and of hybrid-norm interpolation.

    Interpolation: with s = theta s1 + (1 - theta) s2 (same for sigma),
    ||f||_{s, sigma} <= ||f||_{s1, sigma1}^theta ||f||_{s2, sigma2}^(1-theta).
    """
    n = f.grid.n
    hp = HybridParams(n / 2, n / p, p, R0)
    emb = hybrid_norm(sys, f, hp)
    sup = float(np.max(np.abs(f.physical())))
    rows = []
    s1, s2 = s_pair
    g1, g2 = sigma_pair
    for th in thetas:
        mid = HybridParams(th * s1 + (1 - th) * s2, th * g1 + (1 - th) * g2, p, R0)
        lhs = hybrid_norm(sys, f, mid)
        a = hybrid_norm(sys, f, HybridParams(s1, g1, p, R0))
        b = hybrid_norm(sys, f, HybridParams(s2, g2, p, R0))
        rows.append((th, lhs, a**th * b ** (1 - th)))
    return EmbeddingReport(sup, emb, sup / emb if emb > 0 else 0.0, rows)


def write_spectrum_csv(sys: DyadicSystem, f: SpectralField, p: float, sink) -> None:
    """Columns j, 2^j, ||Delta_j f||_2, ||Delta_j f||_p."""
    js, norms = block_norms(sys, f, sorted({2.0, p}))
    own = isinstance(sink, str) or hasattr(sink, "__fspath__")
    fh = open(sink, "w", newline="") if own else sink
    try:
        w = csv.writer(fh)
        w.writerow(["j", "two_j", "l2", f"l{p:g}"])
        for i, j in enumerate(js):
            w.writerow([int(j), "%.17g" % 2.0**j, "%.17g" % norms[2.0][i], "%.17g" % norms[p][i]])
    finally:
        if own:
            fh.close()


def mean_free(f: SpectralField) -> SpectralField:
    c = f.coeffs.copy()
    c[(Ellipsis,) + (0,) * f.grid.n] = 0.0
    return zero_nyquist(SpectralField(f.grid, c, f.real))
