"""Bony paraproducts, commutators, composition and constant-ratio probes."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .besov import HybridParams, block_norms, hybrid_weights
from .dealias import dealiaser
from .lp import DyadicSystem, build_dyadic_system, delta_j
from .spectral import Grid, SpectralField, forward, grad, norm_of_samples, zero_nyquist

VACUUM_FLOOR = 1e-3


class VacuumError(ValueError):
    """Raised when 1 + a drops to the density floor."""


# --- Bony decomposition ----------------------------------------------------

@dataclass
class BonySplit:
    Tfg: SpectralField
    Tgf: SpectralField
    R: SpectralField

    def total(self) -> SpectralField:
        return self.Tfg + self.Tgf + self.R


def _padded_blocks(sys: DyadicSystem, f: SpectralField) -> list:
    dl = dealiaser(f.grid)
    return [dl.to_padded(delta_j(sys, f, j)) for j in sys.j_values]


def _lowpass_stack(blocks: list, mean: float) -> list:
    """S_{k-1} f = mean + sum_{j <= k-2} Delta_j f, for each block position k."""
    out = []
    acc = np.zeros_like(blocks[0]) + mean
    for i in range(len(blocks)):
        out.append(acc.copy())
        if i >= 1:
            acc = acc + blocks[i - 1]
    return out


def _para_physical(low_f: list, blocks_g: list) -> np.ndarray:
    total = np.zeros_like(blocks_g[0])
    for lf, bg in zip(low_f, blocks_g):
        total += lf * bg
    return total


def _check_scalar_pair(f: SpectralField, g: SpectralField):
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    if f.rank != 0 or g.rank != 0:
        raise ValueError("paraproducts act on scalar fields")


def bony_split(sys: DyadicSystem, f: SpectralField, g: SpectralField) -> BonySplit:
    """fg = T_f g + T_g f + R(f, g), products dealiased on the 3/2 grid.

    On the torus the product of the two means is not produced by any block
    interaction; it is assigned to R so the identity is exact.
    """
    _check_scalar_pair(f, g)
    dl = dealiaser(f.grid)
    bf = _padded_blocks(sys, f)
    bg = _padded_blocks(sys, g)
    mf, mg = float(np.real(f.mean)), float(np.real(g.mean))
    tfg = _para_physical(_lowpass_stack(bf, mf), bg)
    tgf = _para_physical(_lowpass_stack(bg, mg), bf)
    r = np.full_like(bf[0], mf * mg)
    J = len(bf)
    for i in range(J):
        tilde = bg[i].copy()
        if i > 0:
            tilde += bg[i - 1]
        if i + 1 < J:
            tilde += bg[i + 1]
        r += bf[i] * tilde
    return BonySplit(dl.from_padded(tfg), dl.from_padded(tgf), dl.from_padded(r))


def paraproduct(sys: DyadicSystem, f: SpectralField, g: SpectralField) -> SpectralField:
    """T_f g = sum_j S_{j-1} f Delta_j g."""
    _check_scalar_pair(f, g)
    bf = _padded_blocks(sys, f)
    bg = _padded_blocks(sys, g)
    low = _lowpass_stack(bf, float(np.real(f.mean)))
    return dealiaser(f.grid).from_padded(_para_physical(low, bg))


def remainder(sys: DyadicSystem, f: SpectralField, g: SpectralField) -> SpectralField:
    return bony_split(sys, f, g).R


def bony_residual(sys: DyadicSystem, f: SpectralField, g: SpectralField) -> float:
    """||fg - (T_f g + T_g f + R)||_2 / ||fg||_2 with the dealiased product."""
    dl = dealiaser(f.grid)
    prod = dl.product(f, g)
    diff = prod.coeffs - bony_split(sys, f, g).total().coeffs
    den = np.sqrt(np.sum(np.abs(prod.coeffs) ** 2))
    return float(np.sqrt(np.sum(np.abs(diff) ** 2)) / den) if den > 0 else 0.0


# --- commutator and composition --------------------------------------------

def transport(v: SpectralField, f: SpectralField) -> SpectralField:
    """Dealiased v . grad f for a vector field v and scalar f."""
    dl = dealiaser(f.grid)
    vp = dl.to_padded(v)
    gp = dl.to_padded(grad(f))
    return dl.from_padded(np.sum(vp * gp, axis=0))


def commutator_field(sys: DyadicSystem, v: SpectralField, f: SpectralField, j: int) -> SpectralField:
    """[v, Delta_j] . grad f = v . grad(Delta_j f) - Delta_j(v . grad f)."""
    if v.rank != 1 or f.rank != 0:
        raise ValueError("commutator needs a vector v and a scalar f")
    sys.check_j(j)
    return transport(v, delta_j(sys, f, j)) - delta_j(sys, transport(v, f), j)


class PressureK:
    """K(a) = (1 + a)^(gamma - 2) - 1."""

    needs_positive_density = True

    def __init__(self, gamma: float):
        self.gamma = float(gamma)

    def __call__(self, a):
        return np.power(1.0 + a, self.gamma - 2.0) - 1.0

    def derivative(self, a):
        return (self.gamma - 2.0) * np.power(1.0 + a, self.gamma - 3.0)


class ViscousL:
    """L(a) = a / (1 + a)."""

    needs_positive_density = True

    def __call__(self, a):
        return a / (1.0 + a)

    def derivative(self, a):
        return 1.0 / (1.0 + a) ** 2


def check_density(values: np.ndarray, floor: float = VACUUM_FLOOR) -> None:
    low = float(np.min(1.0 + values))
    if low <= floor:
        raise VacuumError(f"vacuum: min(1 + a) = {low:.3e} <= {floor:g}")


def compose_pointwise(f: SpectralField, F, floor: float = VACUUM_FLOOR) -> SpectralField:
    """F(f) evaluated at the grid points and transformed back."""
    zero = np.asarray(F(np.zeros(1)), dtype=float)
    if abs(float(zero[0])) > 1e-14:
        raise ValueError("composition requires F(0) = 0")
    vals = f.physical()
    if getattr(F, "needs_positive_density", False):
        check_density(vals, floor)
    return zero_nyquist(forward(f.grid, F(vals)))


# --- random fields ---------------------------------------------------------

def random_field(grid: Grid, decay: float = 1.0, seed: int = 42, rank: int = 0,
                 kmax: int = 12) -> SpectralField:
    """Seeded mean-zero random field with block amplitudes 2^(-j decay) c(j).

    Coefficients are complex Gaussians on the integer modes |m|_inf <= kmax,
    drawn on a fixed box so the same seed yields the same function on every
    grid that resolves it.
    """
    rng = np.random.default_rng(seed)
    n = grid.n
    kmax = min(kmax, grid.N // 2 - 1)
    side = 2 * kmax + 1
    comps = ((), (n,), (n, n))[rank]
    box = rng.standard_normal(comps + (side,) * n) + 1j * rng.standard_normal(comps + (side,) * n)
    cj = rng.uniform(0.5, 1.5, size=64)  # indexed by j + 32
    # Hermitian symmetrize: c(m) = (z(m) + conj(z(-m))) / 2
    flip = np.flip(box, axis=tuple(range(box.ndim - n, box.ndim)))
    box = 0.5 * (box + np.conj(flip))
    coeffs = np.zeros(comps + grid.shape, dtype=np.complex128)
    idx = np.arange(-kmax, kmax + 1) % grid.N
    coeffs[(Ellipsis,) + np.ix_(*([idx] * n))] = box
    sys = build_dyadic_system(grid)
    shape = np.zeros(grid.shape)
    for j in sys.j_values:
        shape += 2.0 ** (-j * decay) * cj[j + 32] * sys.block_symbol(j)
    coeffs *= shape
    coeffs[(Ellipsis,) + (0,) * n] = 0.0
    return zero_nyquist(SpectralField(grid, coeffs, real=True))


# --- estimate probes -------------------------------------------------------

PROBE_KINDS = ("product_a", "product_b", "para_high", "para_low", "remainder",
               "commutator", "composition")


@dataclass(frozen=True)
class ProbeParams:
    s: float = 0.5
    sigma: float = 0.5
    t: float = 0.5
    tau: float = 0.5
    p: float = 3.0
    R0: float = 2.0
    gamma: float = 0.0
    window: float = 16.0     # 2^j ~ R0 means R0/window <= 2^j <= window*R0
    amplitude: float = 0.3   # sup norm of composition inputs


def default_probe_params(kind: str) -> ProbeParams:
    if kind not in PROBE_KINDS:
        raise ValueError(f"unknown probe kind {kind!r}")
    if kind == "para_low":
        return ProbeParams(sigma=0.25)
    if kind == "composition":
        return ProbeParams(s=1.0, sigma=0.5)
    return ProbeParams()


def check_admissible(kind: str, n: int, pp: ProbeParams) -> None:
    """Raise ValueError naming the first violated constraint."""
    p = pp.p
    s, sg, t, tau = pp.s, pp.sigma, pp.t, pp.tau

    def need(ok, msg):
        if not ok:
            raise ValueError(f"{kind} requires {msg}")

    need(2 <= p <= 4, "2 <= p <= 4")
    if kind == "product_a":
        need(sg <= n / p and tau <= n / p, "sigma, tau <= n/p")
        need(sg + tau > 0, "sigma+tau > 0")
    elif kind == "product_b":
        need(s <= n / p, "s <= n/p")
        need(s + t > n - 2 * n / p, "s+t > n - 2n/p")
    elif kind == "para_high":
        need(s <= n / 2, "s <= n/2")
        need(sg <= n / p, "sigma <= n/p")
    elif kind == "para_low":
        need(s <= n / p, "s <= n/p")
        need(sg <= 2 * n / p - n / 2, "sigma <= 2n/p - n/2")
    elif kind == "remainder":
        need(s + t > 0, "s+t > 0")
        need(s + tau > 0, "s+tau > 0")
        need(sg + t > 0, "sigma+t > 0")
        need(sg + tau > 0, "sigma+tau > 0")
    elif kind == "commutator":
        need(-n / p < s <= n / 2 + 1, "-n/p < s <= n/2+1")
        need(-n / p < sg <= n / p + 1, "-n/p < sigma <= n/p+1")
    elif kind == "composition":
        need(s > 0 and sg > 0, "s, sigma > 0")
        need(s >= sg - n / 2 + n / p, "s >= sigma - n/2 + n/p")
    else:
        raise ValueError(f"unknown probe kind {kind!r}")


@dataclass
class ProbeReport:
    kind: str
    params: ProbeParams
    seed: int | None
    lhs: float
    rhs: float
    ratio: float


class _Blocks:
    """Cached per-block L^2 / L^p norms of one field."""

    def __init__(self, sys: DyadicSystem, f: SpectralField, p: float):
        c = f.coeffs.copy()
        c[(Ellipsis,) + (0,) * f.grid.n] = 0.0
        self.js, norms = block_norms(sys, SpectralField(f.grid, c, f.real), sorted({2.0, p}))
        self.l2, self.lp = norms[2.0], norms[p]
        self.p = p

    def hybrid(self, s: float, sigma: float, R0: float) -> float:
        w, low = hybrid_weights(self.js, HybridParams(s, sigma, self.p, R0))
        return float(np.sum(np.where(low, w * self.l2, w * self.lp)))

    def besov2(self, s: float) -> float:
        return float(np.sum(2.0 ** (s * self.js) * self.l2))


def estimate_ratio_probe(sys: DyadicSystem, kind: str, inputs, params: ProbeParams | None = None,
                         seed: int | None = None, F=None) -> ProbeReport:
    """Measure LHS and RHS (without the constant) of one estimate.

    Block-localized estimates carrying an l^1 sequence c(j) are summed as
    LHS = sum_j ||block_j|| / weight_j, which is bounded by C * RHS.
    """
    pp = params or default_probe_params(kind)
    n = sys.grid.n
    check_admissible(kind, n, pp)
    p, R0 = pp.p, pp.R0
    s, sg, t, tau = pp.s, pp.sigma, pp.t, pp.tau
    pprime = p / (p - 1.0)

    if kind == "composition":
        (f,) = inputs
        F = F or ViscousL()
        Ff = _Blocks(sys, compose_pointwise(f, F), p)
        fb = _Blocks(sys, f, p)
        lhs = Ff.hybrid(s, sg, R0)
        power = max(math.floor(s), math.floor(sg)) + 1
        rhs = (1.0 + fb.hybrid(n / p, n / p, R0)) ** power * fb.hybrid(s, sg, R0)
        return _report(kind, pp, seed, lhs, rhs)

    if kind == "commutator":
        v, f = inputs
        js = np.array([j for j in sys.j_values if 2.0**j >= R0])
        lhs = 0.0
        for j in js:
            c = commutator_field(sys, v, f, int(j))
            w = 2.0 ** (-j * sg) + 2.0 ** (j * (n / 2 - n / p - s))
            lhs += _lp_norm(c, p) / w
        vb = _Blocks(sys, v, p)
        fb = _Blocks(sys, f, p)
        rhs = vb.hybrid(n / 2 + 1, n / p + 1, R0) * fb.hybrid(s, sg, R0)
        return _report(kind, pp, seed, lhs, rhs)

    f, g = inputs
    fb = _Blocks(sys, f, p)
    gb = _Blocks(sys, g, p)

    if kind == "product_a":
        prod = _Blocks(sys, dealiaser(f.grid).product(f, g), p)
        high = 2.0**prod.js > R0
        lhs = float(np.sum((2.0 ** (prod.js * (sg + tau - n / p)) * prod.lp)[high]))
        rhs = fb.hybrid(n / 2 - n / p + sg, sg, R0) * gb.hybrid(n / 2 - n / p + tau, tau, R0)
        return _report(kind, pp, seed, lhs, rhs)

    if kind == "product_b":
        prod = _Blocks(sys, dealiaser(f.grid).product(f, g), p)
        low = 2.0**prod.js <= R0
        lhs = float(np.sum((2.0 ** (prod.js * (s + t - n / 2)) * prod.l2)[low]))
        shift = -n / 2 + n / p
        rhs = (fb.hybrid(s, s + shift, R0) * gb.hybrid(t, t + shift + pp.gamma, R0)
               + gb.hybrid(s, s + shift, R0) * fb.hybrid(t, t + shift, R0))
        return _report(kind, pp, seed, lhs, rhs)

    rhs = fb.hybrid(s, sg, R0) * gb.hybrid(t, tau, R0)

    if kind == "para_high":
        tb = _Blocks(sys, paraproduct(sys, f, g), p)
        j = tb.js.astype(float)
        w = 2.0 ** (j * (n / pprime - s - t)) + 2.0 ** (j * (n / 2 - s - tau)) + 2.0 ** (j * (n / p - sg - tau))
        high = 2.0**j > R0
        lhs = float(np.sum((tb.lp / w)[high]))
        return _report(kind, pp, seed, lhs, rhs)

    if kind == "para_low":
        tb = _Blocks(sys, paraproduct(sys, f, g), p)
        j = tb.js.astype(float)
        near = (2.0**j >= R0 / pp.window) & (2.0**j <= R0 * pp.window)
        w = 2.0 ** (j * (n / 2 - s - t)) + np.where(
            near, 2.0 ** (j * (n / p - s - tau)) + 2.0 ** (j * (2 * n / p - n / 2 - sg - tau)), 0.0)
        low = 2.0**j <= R0
        lhs = float(np.sum((tb.l2 / w)[low]))
        return _report(kind, pp, seed, lhs, rhs)

    if kind == "remainder":
        rb = _Blocks(sys, remainder(sys, f, g), p)
        j = rb.js.astype(float)
        w_high = (2.0 ** (j * (n / pprime - s - t)) + 2.0 ** (j * (n / 2 - s - tau))
                  + 2.0 ** (j * (n / 2 - sg - t)) + 2.0 ** (j * (n / p - sg - tau)))
        w_low = (2.0 ** (j * (n / 2 - s - t)) + 2.0 ** (j * (n / p - s - tau))
                 + 2.0 ** (j * (n / p - sg - t)) + 2.0 ** (j * (2 * n / p - n / 2 - sg - tau)))
        high = 2.0**j > R0
        lhs = float(np.sum(np.where(high, rb.lp / w_high, rb.l2 / w_low)))
        return _report(kind, pp, seed, lhs, rhs)

    raise ValueError(f"unknown probe kind {kind!r}")


def _lp_norm(f: SpectralField, p: float) -> float:
    return norm_of_samples(f.physical(), p, f.grid)


def _report(kind, pp, seed, lhs, rhs) -> ProbeReport:
    return ProbeReport(kind, pp, seed, float(lhs), float(rhs), float(lhs / rhs) if rhs > 0 else 0.0)


def sample_probe_inputs(kind: str, grid: Grid, seed: int, params: ProbeParams | None = None,
                        kmax: int = 12):
    """Seeded random inputs suited to ``kind``."""
    pp = params or default_probe_params(kind)
    if kind == "composition":
        a = random_field(grid, decay=1.0, seed=seed, kmax=kmax)
        top = float(np.max(np.abs(a.physical())))
        return (a * (pp.amplitude / top),)
    if kind == "commutator":
        v = random_field(grid, decay=1.5, seed=seed, rank=1, kmax=kmax)
        f = random_field(grid, decay=1.0, seed=seed + 100_000, kmax=kmax)
        return (v, f)
    f = random_field(grid, decay=1.0, seed=seed, kmax=kmax)
    g = random_field(grid, decay=1.0, seed=seed + 100_000, kmax=kmax)
    return (f, g)


@dataclass
class BatchReport:
    kind: str
    params: ProbeParams
    reports: list = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        return max(r.ratio for r in self.reports)


def batch_probe(kind: str, grid: Grid, params: ProbeParams | None = None, n_samples: int = 100,
                seed: int = 42, kmax: int = 12) -> BatchReport:
    """Run ``n_samples`` seeded probes; the max ratio is the empirical constant."""
    pp = params or default_probe_params(kind)
    check_admissible(kind, grid.n, pp)
    sys = build_dyadic_system(grid)
    out = BatchReport(kind, pp)
    for i in range(n_samples):
        inputs = sample_probe_inputs(kind, grid, seed + i, pp, kmax)
        out.reports.append(estimate_ratio_probe(sys, kind, inputs, pp, seed=seed + i))
    return out


def write_probe_csv(reports, sink) -> None:
    """Columns kind, params, seed, lhs, rhs, ratio."""
    own = isinstance(sink, str) or hasattr(sink, "__fspath__")
    fh = open(sink, "w", newline="") if own else sink
    try:
        w = csv.writer(fh)
        w.writerow(["kind", "params", "seed", "lhs", "rhs", "ratio"])
        for r in reports:
            prm = ";".join(f"{k}={v:g}" for k, v in asdict(r.params).items())
            w.writerow([r.kind, prm, r.seed, "%.17g" % r.lhs, "%.17g" % r.rhs, "%.17g" % r.ratio])
    finally:
        if own:
            fh.close()
