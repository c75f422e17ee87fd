"""ETDRK2 pseudospectral solver for the nonlinear system in (a, d, Omega).

Per step of size h, with U = (a^, d^) and the 2x2 linear operator M(xi):

    U*      = e^{hM} U + h phi1(hM) S(U)
    U_{n+1} = U* + h phi2(hM) (S(U*) - S(U))

Omega uses the scalar heat factor e^{-mu r^2 h} in the same scheme and the
mean velocity follows the trapezoid rule.  S collects every nonlinear term,
convection included.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .. import kernels
from ..besov import HybridParams, NormSeries, hybrid_norm
from ..dealias import dealiaser
from ..fieldio import write_field
from ..green import green_entries
from ..lp import build_dyadic_system
from ..paraproduct import VACUUM_FLOOR, VacuumError
from ..spectral import Grid, SpectralField, forward, zero_nyquist
from .hodge import reconstruct_coeffs, split_coeffs
from .params import PhysicsParams


class BlowUpError(RuntimeError):
    pass


# --- state -------------------------------------------------------------------

@dataclass
class SolverState:
    grid: Grid
    a: np.ndarray          # coefficients, grid.shape
    d: np.ndarray
    omega: np.ndarray      # (n, n) + grid.shape
    mean_v: np.ndarray     # (n,)
    t: float = 0.0

    @classmethod
    def from_fields(cls, a: SpectralField, v: SpectralField, t: float = 0.0) -> "SolverState":
        if a.grid != v.grid or a.rank != 0 or v.rank != 1:
            raise ValueError("initial data must be a scalar a and a vector v on one grid")
        d, om, mean = split_coeffs(v.grid, v.coeffs)
        return cls(a.grid, zero_nyquist(a).coeffs.copy(), d, om, mean, float(t))

    @classmethod
    def zeros(cls, grid: Grid) -> "SolverState":
        n = grid.n
        z = np.zeros(grid.shape, dtype=np.complex128)
        return cls(grid, z, z.copy(), np.zeros((n, n) + grid.shape, dtype=np.complex128), np.zeros(n))

    def velocity_coeffs(self) -> np.ndarray:
        return reconstruct_coeffs(self.grid, self.d, self.omega, self.mean_v)

    def velocity(self) -> SpectralField:
        return SpectralField(self.grid, self.velocity_coeffs())

    def fields(self):
        g = self.grid
        return SpectralField(g, self.a), SpectralField(g, self.d), SpectralField(g, self.omega)

    @property
    def mean_a(self) -> float:
        return float(self.a[(0,) * self.grid.n].real)

    def copy(self) -> "SolverState":
        return SolverState(self.grid, self.a.copy(), self.d.copy(), self.omega.copy(),
                           self.mean_v.copy(), self.t)


@dataclass
class SolverConfig:
    dt: float = 0.01
    T_end: float = 1.0
    dealias: bool = True
    monitor_norms: list = field(default_factory=list)   # extra HybridParams to report
    snapshot_stride: int = 0
    monitor_stride: int = 1
    p: float | None = None          # Lebesgue exponent of the critical norm
    R0: float | None = None         # hybrid threshold; default 2/nu_bar
    cfl: float = 0.5
    density_floor: float = VACUUM_FLOOR

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T_end >= self.dt:
            raise ValueError("T_end must be at least dt")
        if self.monitor_stride < 1:
            raise ValueError("monitor_stride must be >= 1")
        if not self.dealias:
            # products are always evaluated on the padded grid; the switch is kept for configs
            pass


# --- linear coefficients -------------------------------------------------------

def _phi_scalar(z: np.ndarray):
    """phi1(z) = (e^z - 1)/z, phi2(z) = (e^z - 1 - z)/z^2, series near 0."""
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    em1 = np.expm1(zs)
    phi1 = np.where(small, 1 + z / 2 + z**2 / 6 + z**3 / 24, em1 / zs)
    phi2 = np.where(small, 0.5 + z / 6 + z**2 / 24 + z**3 / 120, (em1 - zs) / zs**2)
    return phi1, phi2


def phi_matrices(r: np.ndarray, h: float, nu_bar: float):
    """exp(hM), phi1(hM), phi2(hM) per radius via the augmented 6x6 exponential.

    Returns three arrays of shape (len(r), 2, 2).
    """
    m = len(r)
    B = np.zeros((m, 6, 6))
    B[:, 0, 1] = -h * r
    B[:, 1, 0] = h * r
    B[:, 1, 1] = -h * nu_bar * r * r
    B[:, 0, 2] = B[:, 1, 3] = 1.0
    B[:, 2, 4] = B[:, 3, 5] = 1.0
    E = expm(B)
    return E[:, :2, :2], E[:, :2, 2:4], E[:, :2, 4:6]


class LinearCoefficients:
    """Lattice arrays of the exact linear flow and ETD weights for one dt."""

    def __init__(self, grid: Grid, params: PhysicsParams, h: float):
        self.h = h
        r, inv = grid.unique_radii
        g = green_entries(r, h, params.nu_bar)
        self.G = tuple(e[inv] for e in g)
        _, p1, p2 = phi_matrices(r, h, params.nu_bar)
        self.P1 = tuple(h * p1[:, i, j][inv] for i in (0, 1) for j in (0, 1))
        self.P2 = tuple(h * p2[:, i, j][inv] for i in (0, 1) for j in (0, 1))
        z = -params.mu_bar * r * r * h
        s1, s2 = _phi_scalar(z)
        self.heat = np.exp(z)[inv]
        self.heat1 = (h * s1)[inv]
        self.heat2 = (h * s2)[inv]


# --- nonlinear terms -----------------------------------------------------------

@dataclass
class Sources:
    Sa: np.ndarray          # -div(a v)         = F - v.grad a
    Sd: np.ndarray          # -Lambda^-1 div m  = G - v.grad d
    H: np.ndarray           # -Lambda^-1 curl m1
    mean_force: np.ndarray  # -mean(m)
    min_density: float


@dataclass
class NonlinearTerms:
    F: SpectralField
    G: SpectralField
    H: SpectralField
    mean_force: np.ndarray


def _inv_radius(grid):
    r = grid.xi_norm
    return np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), 0.0)


def compute_sources(grid: Grid, params: PhysicsParams, a: np.ndarray, v: np.ndarray,
                    floor: float = VACUUM_FLOOR) -> Sources:
    """Every nonlinear term from the coefficients of a and v, on the padded grid.

    m1 = v.grad v + L(a) A v and m = m1 + K(a) grad a.
    """
    n = grid.n
    dl = dealiaser(grid)
    k = grid.wavevectors
    mu, lam = params.mu_bar, params.lambda_bar
    kv = np.sum(k * v, axis=0)
    Av = -mu * grid.xi_norm**2 * v - (lam + mu) * k * kv
    gv = 1j * k[None, :] * v[:, None]                    # gv[i, j] = d_j v_i
    ga = 1j * k * a
    stack = np.concatenate([a[None], v, gv.reshape((n * n,) + grid.shape), ga, Av])
    phys = dl.coeffs_to_padded(stack).real
    ap = phys[0]
    vp = phys[1:1 + n]
    gvp = phys[1 + n:1 + n + n * n].reshape((n, n) + ap.shape)
    gap = phys[1 + n + n * n:1 + 2 * n + n * n]
    Avp = phys[1 + 2 * n + n * n:]
    min_density = float(np.min(1.0 + ap))
    if min_density <= floor:
        raise VacuumError(f"vacuum: min(1 + a) = {min_density:.3e} <= {floor:g}")
    m1 = np.einsum("j...,ij...->i...", vp, gvp) + params.L(ap) * Avp
    m2 = params.K(ap) * gap
    flux = ap * vp
    back = dl.padded_to_coeffs(np.concatenate([m1, m2, flux]))
    m1h, m2h, fh = back[:n], back[n:2 * n], back[2 * n:]
    inv = _inv_radius(grid)
    keep = grid.keep_mask
    Sa = -np.sum(1j * k * fh, axis=0) * keep
    mh = m1h + m2h
    Sd = -inv * np.sum(1j * k * mh, axis=0) * keep
    cm = 1j * k[None, :] * m1h[:, None]                  # cm[i, j] = d_j m1_i
    H = -inv * (cm - np.swapaxes(cm, 0, 1)) * keep
    mean_force = -mh[(slice(None),) + (0,) * n].real.copy()
    return Sources(Sa, Sd, H, mean_force, min_density)


def nonlinear_rhs(state: SolverState, params: PhysicsParams) -> NonlinearTerms:
    """F = -a div v, G = v.grad d - Lambda^-1 div(m), H = -Lambda^-1 curl(m1)."""
    g = state.grid
    v = state.velocity_coeffs()
    src = compute_sources(g, params, state.a, v)
    dl = dealiaser(g)
    k = g.wavevectors
    divv = np.sum(1j * k * v, axis=0)
    pa, pdiv = dl.coeffs_to_padded(np.stack([state.a, divv])).real
    F = -dl.padded_to_coeffs(pa * pdiv)
    vp = dl.coeffs_to_padded(v).real
    gdp = dl.coeffs_to_padded(1j * k * state.d).real
    vgd = dl.padded_to_coeffs(np.sum(vp * gdp, axis=0))
    G = vgd + src.Sd
    return NonlinearTerms(SpectralField(g, F * g.keep_mask), SpectralField(g, G * g.keep_mask),
                          SpectralField(g, src.H), src.mean_force)


# --- stepping ------------------------------------------------------------------

def advective_bound(state: SolverState, cfl: float = 0.5) -> float:
    g = state.grid
    vphys = forward_inverse_velocity(state)
    vmax = float(np.sqrt(np.sum(vphys**2, axis=0)).max())
    return math.inf if vmax == 0 else cfl * g.dx / vmax


def forward_inverse_velocity(state: SolverState) -> np.ndarray:
    return SpectralField(state.grid, state.velocity_coeffs()).physical()


class Stepper:
    """Caches linear coefficients per step size."""

    def __init__(self, grid: Grid, params: PhysicsParams, floor: float = VACUUM_FLOOR):
        self.grid = grid
        self.params = params
        self.floor = floor
        self._coeffs: dict = {}

    def coefficients(self, h: float) -> LinearCoefficients:
        key = float(h)
        if key not in self._coeffs:
            if len(self._coeffs) > 8:
                self._coeffs.pop(next(iter(self._coeffs)))
            self._coeffs[key] = LinearCoefficients(self.grid, self.params, key)
        return self._coeffs[key]

    def sources(self, a, d, om, mv) -> Sources:
        v = reconstruct_coeffs(self.grid, d, om, mv)
        return compute_sources(self.grid, self.params, a, v, self.floor)

    def step(self, state: SolverState, h: float) -> SolverState:
        c = self.coefficients(h)
        s0 = self.sources(state.a, state.d, state.omega, state.mean_v)
        la, ld = kernels.apply_2x2(*c.G, state.a, state.d)
        qa, qd = kernels.apply_2x2(*c.P1, s0.Sa, s0.Sd)
        a1, d1 = la + qa, ld + qd
        om1 = c.heat * state.omega + c.heat1 * s0.H
        mv1 = state.mean_v + h * s0.mean_force
        s1 = self.sources(a1, d1, om1, mv1)
        ca, cd = kernels.apply_2x2(*c.P2, s1.Sa - s0.Sa, s1.Sd - s0.Sd)
        a2 = a1 + ca
        d2 = d1 + cd
        om2 = om1 + c.heat2 * (s1.H - s0.H)
        mv2 = state.mean_v + 0.5 * h * (s0.mean_force + s1.mean_force)
        t = state.t + h
        if not (np.all(np.isfinite(a2)) and np.all(np.isfinite(d2)) and np.all(np.isfinite(om2))):
            raise BlowUpError(f"blow-up detected at t={t:.6g}")
        return SolverState(self.grid, a2, d2, om2, mv2, t)


def step(state: SolverState, params: PhysicsParams, dt: float, stepper: Stepper | None = None,
         cfl: float = 0.5) -> SolverState:
    """One ETDRK2 step; dt must respect dt <= cfl * dx / max|v|."""
    bound = advective_bound(state, cfl)
    if dt > bound * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} violates the advective bound {bound:.4g}")
    stepper = stepper or Stepper(state.grid, params)
    return stepper.step(state, dt)


# --- driver ----------------------------------------------------------------------

@dataclass
class SolveResult:
    state: SolverState
    status: str                   # "completed", "blow-up" or "vacuum"
    message: str
    steps: int
    times: np.ndarray
    series_a: NormSeries
    series_d: NormSeries
    series_v: NormSeries
    e_norm: np.ndarray            # running critical norm at each sample time
    initial_norm: float
    mass_drift: float
    min_density: float
    extra_norms: dict

    @property
    def norm_ratio(self) -> float:
        """max_t E(t) / E_0, the measured constant M."""
        if self.initial_norm == 0:
            return 0.0
        return float(np.max(self.e_norm) / self.initial_norm)


def default_p(n: int) -> float:
    return 3.0


def critical_pieces(n: int, p: float, R0: float):
    """Hybrid parameters of the four pieces of the critical norm at s = n/p."""
    s = n / p
    sp = n / 2
    return {
        "a_inf": HybridParams(sp - 1, s, p, R0),
        "d_inf": HybridParams(sp - 1, s - 1, p, R0),
        "a_l1": HybridParams(sp + 1, s, p, R0),
        "d_l1": HybridParams(sp + 1, s + 1, p, R0),
    }


def running_critical_norm(series_a: NormSeries, series_d: NormSeries, n: int, p: float,
                          R0: float) -> np.ndarray:
    hp = critical_pieces(n, p, R0)
    return (series_a.running(math.inf, hp["a_inf"]) + series_d.running(math.inf, hp["d_inf"])
            + series_a.running(1, hp["a_l1"]) + series_d.running(1, hp["d_l1"]))


def solve(initial, params: PhysicsParams, config: SolverConfig, out_dir=None,
          raise_on_failure: bool = False) -> SolveResult:
    """Integrate to T_end (or until blow-up / vacuum) while monitoring norms.

    ``initial`` is a SolverState or a pair (a0, v0) of SpectralFields.  The
    running critical norm uses the pair (a, v); a blow-up or vacuum ends the
    run and is recorded in ``status`` unless ``raise_on_failure`` is set.
    """
    state = initial.copy() if isinstance(initial, SolverState) else SolverState.from_fields(*initial)
    g = state.grid
    n = g.n
    p = config.p or default_p(n)
    R0 = config.R0 or 2.0 / params.nu_bar
    sys = build_dyadic_system(g)
    stepper = Stepper(g, params, config.density_floor)
    sa, sd, sv = (NormSeries.for_system(sys, p) for _ in range(3))
    extras = {hp: [] for hp in config.monitor_norms}

    def sample(st: SolverState):
        a = SpectralField(g, st.a)
        sa.append(sys, st.t, a)
        sd.append(sys, st.t, SpectralField(g, st.d))
        sv.append(sys, st.t, st.velocity())
        for hp in extras:
            extras[hp].append(hybrid_norm(sys, a, hp))

    a0 = SpectralField(g, state.a)
    v0 = state.velocity()
    initial_norm = (_quiet_hybrid(sys, a0, HybridParams(n / 2 - 1, n / p, p, R0))
                    + _quiet_hybrid(sys, v0, HybridParams(n / 2 - 1, n / p - 1, p, R0)))
    mass0 = state.mean_a
    sample(state)
    snaps = None
    if out_dir is not None and config.snapshot_stride > 0:
        snaps = os.path.join(out_dir, "run")
        os.makedirs(snaps, exist_ok=True)
        _snapshot(snaps, 0, state)

    status, message = "completed", ""
    steps = 0
    min_density = float(np.min(1.0 + a0.physical()))
    T = config.T_end
    while state.t < T - 1e-12 * T:
        h = config.dt
        bound = advective_bound(state, config.cfl)
        while h > bound:
            h /= 2
        h = min(h, T - state.t)
        try:
            new = stepper.step(state, h)
        except BlowUpError as exc:
            status, message = "blow-up", str(exc)
            if raise_on_failure:
                raise
            break
        except VacuumError as exc:
            status, message = "vacuum", f"{exc} at t={state.t:.6g}"
            if raise_on_failure:
                raise
            break
        steps += 1
        state = new
        min_density = min(min_density, float(np.min(1.0 + SpectralField(g, state.a).physical())))
        last = state.t >= T - 1e-12 * T
        if steps % config.monitor_stride == 0 or last:
            sample(state)
        if snaps and steps % config.snapshot_stride == 0:
            _snapshot(snaps, steps, state)

    e_norm = running_critical_norm(sa, sv, n, p, R0)
    return SolveResult(state, status, message, steps, np.asarray(sa.times), sa, sd, sv, e_norm,
                       initial_norm, abs(state.mean_a - mass0), min_density,
                       {hp: np.asarray(v) for hp, v in extras.items()})


def _quiet_hybrid(sys, f, hp):
    c = f.coeffs.copy()
    c[(Ellipsis,) + (0,) * f.grid.n] = 0.0
    return hybrid_norm(sys, SpectralField(f.grid, c, f.real), hp)


def _snapshot(folder: str, k: int, st: SolverState) -> None:
    a, d, om = st.fields()
    write_field(a, os.path.join(folder, f"{k}.a.sfld"))
    write_field(d, os.path.join(folder, f"{k}.d.sfld"))
    write_field(om, os.path.join(folder, f"{k}.omega.sfld"))


def write_norm_history(result: SolveResult, sink) -> None:
    """Columns t, j, ||Delta_j a||_2, ||Delta_j a||_p, ||Delta_j d||_2, ||Delta_j d||_p, E."""
    ta, a2, ap = result.series_a.arrays()
    _, d2, dp = result.series_d.arrays()
    js = result.series_a.js
    p = result.series_a.p
    own = isinstance(sink, str) or hasattr(sink, "__fspath__")
    fh = open(sink, "w", newline="") if own else sink
    try:
        w = csv.writer(fh)
        w.writerow(["t", "j", "a_l2", f"a_l{p:g}", "d_l2", f"d_l{p:g}", "e_norm"])
        for i, t in enumerate(ta):
            for b, j in enumerate(js):
                w.writerow(["%.17g" % t, int(j), "%.17g" % a2[i, b], "%.17g" % ap[i, b],
                            "%.17g" % d2[i, b], "%.17g" % dp[i, b], "%.17g" % result.e_norm[i]])
    finally:
        if own:
            fh.close()


def manufactured_state(grid: Grid, amplitude: float, seed: int = 42, kmax: int = 4) -> SolverState:
    """Smooth seeded (a, v) with sup|a| = sup|v| = amplitude, for tests and demos."""
    from ..paraproduct import random_field
    a = random_field(grid, decay=2.0, seed=seed, kmax=kmax)
    v = random_field(grid, decay=2.0, seed=seed + 1, rank=1, kmax=kmax)
    a = a * (amplitude / float(np.abs(a.physical()).max()))
    vp = v.physical()
    v = v * (amplitude / float(np.sqrt(np.sum(vp**2, axis=0)).max()))
    return SolverState.from_fields(a, v)
