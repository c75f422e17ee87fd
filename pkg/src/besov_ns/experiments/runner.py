"""Experiment dispatch: runs one configured experiment, writes CSVs and report.txt."""
from __future__ import annotations

import csv
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from ..besov import besov_norm, hybrid_norm, HybridParams, write_spectrum_csv
from ..green import decay_probe, heat_decay_probe, write_decay_csv
from ..lp import build_dyadic_system, orthogonality_error, partition_error, uncovered_energy, \
    write_profile_csv
from ..ns.linear import linear_convection_solve
from ..ns.params import nondimensionalize
from ..ns.solver import SolverConfig, SolverState, manufactured_state, solve, write_norm_history
from ..oscillation import make_oscillating, oscillation_scaling_experiment, unweighted_control, \
    write_oscillation_csv
from ..paraproduct import PROBE_KINDS, batch_probe, bony_split, bony_residual, random_field, \
    write_probe_csv
from ..spectral import SpectralField, make_grid, l2_norm_spectral
from .config import ExperimentConfig


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class RunOutcome:
    kind: str
    checks: list = field(default_factory=list)
    measurements: list = field(default_factory=list)
    files: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def exit_code(self) -> int:
        return 0 if all(c.passed for c in self.checks) else 1

    def measure(self, name: str, value) -> None:
        self.measurements.append((name, value))

    def check(self, name: str, passed: bool, detail: str) -> bool:
        self.checks.append(Check(name, bool(passed), detail))
        return bool(passed)


def _fmt(v) -> str:
    if isinstance(v, float):
        return "%.10g" % v
    return str(v)


def _ints(text) -> list:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _floats(text) -> list:
    return [float(x) for x in str(text).split(",") if x.strip()]


class _Output:
    def __init__(self, out_dir: str, outcome: RunOutcome):
        self.dir = out_dir
        self.outcome = outcome

    def path(self, name: str) -> str:
        p = os.path.join(self.dir, name)
        self.outcome.files.append(name)
        return p


# --- experiments -------------------------------------------------------------------

def _lp_check(cfg: ExperimentConfig, out: _Output, res: RunOutcome) -> None:
    g = make_grid(cfg.grid.n, cfg.grid.N, cfg.grid.L)
    sys = build_dyadic_system(g)
    perr = partition_error(sys)
    oerr = orthogonality_error(sys)
    res.measure("j_range", f"{sys.j_min}..{sys.j_max}")
    res.measure("partition_error", perr)
    res.measure("orthogonality_error", oerr)
    res.check("partition of unity", perr < 1e-10, f"max error {perr:.3e} < 1e-10")
    res.check("block orthogonality", oerr < 1e-12, f"max |phi_j phi_k| {oerr:.3e} < 1e-12")
    f = random_field(g, seed=cfg.seed)
    rec = uncovered_energy(sys, f) / l2_norm_spectral(f)
    res.measure("reconstruction_error", rec)
    res.check("block reconstruction", rec < 1e-12, f"relative error {rec:.3e} < 1e-12")
    write_profile_csv(sys, out.path("profile.csv"))
    _bony(cfg, g, sys, out, res)


def _bony(cfg, g, sys, out, res) -> None:
    pairs = int(cfg.extra("pairs"))
    t0 = time.perf_counter()
    rows = []
    for i in range(pairs):
        f = random_field(g, seed=cfg.seed + 2 * i)
        h = random_field(g, seed=cfg.seed + 2 * i + 1)
        rows.append((i, bony_residual(sys, f, h)))
    elapsed = time.perf_counter() - t0
    worst = max(r for _, r in rows)
    res.measure("bony_max_residual", worst)
    res.measure("bony_seconds", elapsed)
    res.check("Bony decomposition identity", worst < 1e-10,
              f"max residual {worst:.3e} < 1e-10 over {pairs} pairs ({elapsed:.2f} s)")
    with open(out.path("bony_residuals.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pair", "relative_residual"])
        for i, r in rows:
            w.writerow([i, "%.17g" % r])


def _bony_check(cfg, out, res) -> None:
    g = make_grid(cfg.grid.n, cfg.grid.N, cfg.grid.L)
    sys = build_dyadic_system(g)
    _bony(cfg, g, sys, out, res)
    f = random_field(g, seed=cfg.seed)
    h = random_field(g, seed=cfg.seed + 1)
    split = bony_split(sys, f, h)
    for name, part in (("T_f_g", split.Tfg), ("T_g_f", split.Tgf), ("R", split.R)):
        res.measure(f"l2_{name}", l2_norm_spectral(part))


def _besov_norm(cfg, out, res) -> None:
    g = make_grid(cfg.grid.n, cfg.grid.N, cfg.grid.L)
    sys = build_dyadic_system(g)
    s, p, q = float(cfg.extra("s")), float(cfg.extra("p")), float(cfg.extra("q"))
    f = random_field(g, decay=float(cfg.extra("decay")), seed=cfg.seed)
    val = besov_norm(sys, f, s, p, q)
    hyb = hybrid_norm(sys, f, HybridParams(s, s, max(p, 2.0), 2.0))
    res.measure(f"besov_norm(s={s:g},p={p:g},q={q:g})", val)
    res.measure(f"hybrid_norm(s={s:g},sigma={s:g},p={max(p, 2.0):g})", hyb)
    res.check("Besov norm finite and positive", math.isfinite(val) and val > 0, f"{val:.6g}")
    rec = uncovered_energy(sys, f) / l2_norm_spectral(f)
    res.check("block reconstruction", rec < 1e-12, f"relative error {rec:.3e} < 1e-12")
    write_spectrum_csv(sys, f, p, out.path("spectrum.csv"))


def _probe_estimates(cfg, out, res) -> None:
    kinds = PROBE_KINDS if cfg.extra("probe") == "all" else tuple(
        k.strip() for k in str(cfg.extra("probe")).split(","))
    for k in kinds:
        if k not in PROBE_KINDS:
            raise ValueError(f"unknown probe kind {k!r}")
    samples = int(cfg.extra("samples"))
    fine = int(cfg.extra("fine_N"))
    factor = float(cfg.extra("stability_factor"))
    coarse_g = make_grid(cfg.grid.n, cfg.grid.N, cfg.grid.L)
    fine_g = make_grid(cfg.grid.n, fine, cfg.grid.L)
    reports = []
    for k in kinds:
        c = batch_probe(k, coarse_g, n_samples=samples, seed=cfg.seed)
        f = batch_probe(k, fine_g, n_samples=samples, seed=cfg.seed)
        reports += c.reports + f.reports
        cm, fm = c.max_ratio, f.max_ratio
        res.measure(f"{k}_constant_N{coarse_g.N}", cm)
        res.measure(f"{k}_constant_N{fine}", fm)
        ok = math.isfinite(cm) and math.isfinite(fm) and cm > 0 and fm > 0 \
            and max(cm / fm, fm / cm) < factor
        res.check(f"{k} estimate constant stable under refinement", ok,
                  f"C = {cm:.4g} (N={coarse_g.N}), {fm:.4g} (N={fine}); factor < {factor:g}")
    write_probe_csv(reports, out.path("probes.csv"))


def _green_decay(cfg, out, res) -> None:
    nu = _physics(cfg)[0].nu_bar
    N = int(cfg.extra("decay_N"))
    reports = []
    j = int(cfg.extra("low_j"))
    r = 2.0**j
    expected = -nu * r * r / 2
    for regime in ("low_L2", "low_Lp"):
        rep = decay_probe(regime, j, p=cfg.solver.p, nu_bar=nu, N=N, seed=cfg.seed)
        reports.append(rep)
        err = abs(rep.fit.slope - expected)
        res.measure(f"{regime}_slope", rep.fit.slope)
        res.check(f"low-frequency decay rate ({regime})", err < 1e-3,
                  f"slope {rep.fit.slope:.6f} vs -nu|xi|^2/2 = {expected:.6f} (|diff| < 1e-3)")
    rings = _ints(cfg.extra("high_rings"))
    for regime, gap_expected in (("high_G1", -1.0), ("high_G2", -2.0)):
        reps = [decay_probe(regime, jj, p=2.0, nu_bar=nu, N=N, seed=cfg.seed) for jj in rings]
        reports += reps
        slopes = [rp.fit.slope for rp in reps]
        for a, b in zip(reps, reps[1:]):
            gap = (b.fit.intercept - a.fit.intercept) / math.log(2)
            res.measure(f"{regime}_gap_j{a.j}_j{b.j}_log2", gap)
            res.check(f"{regime} prefactor gap between rings {a.j} and {b.j}",
                      abs(gap - gap_expected) <= 0.05 * abs(gap_expected),
                      f"gap {gap:.4f} log 2 vs {gap_expected:g} log 2 (within 5%)")
        spread = (max(slopes) - min(slopes)) / abs(np.mean(slopes))
        res.measure(f"{regime}_slopes", ",".join("%.6g" % s for s in slopes))
        res.check(f"{regime} time slope independent of ring", spread < 0.10,
                  f"relative spread {spread:.4f} < 0.10")
    write_decay_csv(reports, out.path("decay.csv"))


def _heat_decay(cfg, out, res) -> None:
    nu = float(cfg.extra("nu"))
    rows = []
    for j in _ints(cfg.extra("rings")):
        t, norms, fit = heat_decay_probe(j, nu=nu, N=cfg.grid.N, seed=cfg.seed)
        lo = -nu * (8 / 3) ** 2 * 4.0**j
        hi = -nu * (3 / 4) ** 2 * 4.0**j
        res.measure(f"heat_slope_j{j}", fit.slope)
        res.check(f"heat smoothing rate on ring {j}", lo <= fit.slope <= hi,
                  f"slope {fit.slope:.4f} in [{lo:.4f}, {hi:.4f}]")
        rows += [(j, ti, ni, fit.slope) for ti, ni in zip(t, norms)]
    with open(out.path("heat_decay.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "t", "norm", "fitted_slope"])
        for j, ti, ni, sl in rows:
            w.writerow([j, "%.17g" % ti, "%.17g" % ni, "%.17g" % sl])


def _oscillation(cfg, out, res) -> None:
    g = make_grid(cfg.grid.n, cfg.grid.N, cfg.grid.L)
    eps = [2.0**-k for k in range(int(cfg.extra("eps_min_power")), int(cfg.extra("eps_max_power")) + 1)]
    kind = cfg.extra("oscillation")
    R0 = float(cfg.extra("threshold"))
    for p in _floats(cfg.extra("exponents")):
        rep = oscillation_scaling_experiment(g, kind, p, eps, R0)
        res.measure(f"oscillation_slope_p{p:g}", rep.fit.slope)
        res.measure(f"oscillation_r2_p{p:g}", rep.fit.r_squared)
        res.check(f"oscillation decay exponent, p = {p:g}",
                  rep.slope_error <= 0.1 and rep.fit.r_squared > 0.98,
                  f"slope {rep.fit.slope:.4f} vs 1 - n/p = {rep.expected_slope:.4f} (+-0.1), "
                  f"R^2 {rep.fit.r_squared:.4f} > 0.98")
        write_oscillation_csv(rep, out.path(f"oscillation_p{p:g}.csv"))
    ctl = unweighted_control(g, kind, eps, R0)
    res.measure("control_slope_p2", ctl.fit.slope)
    res.check("no decay in the unweighted p = 2 norm", abs(ctl.fit.slope) <= 0.1,
              f"slope {ctl.fit.slope:.4f} vs 0 (+-0.1)")
    write_oscillation_csv(ctl, out.path("oscillation_control_p2.csv"))


def _physics(cfg):
    ph = cfg.physics
    return nondimensionalize(ph.rho_bar, ph.mu, ph.lambda_, ph.gamma)


def _solver_config(cfg, **kw) -> SolverConfig:
    so = cfg.solver
    return SolverConfig(dt=so.dt, T_end=so.T_end, dealias=so.dealias, snapshot_stride=so.snapshot_stride,
                        monitor_stride=so.monitor_stride, p=so.p, **kw)


def _linear_convection(cfg, out, res) -> None:
    params, _ = _physics(cfg)
    amp, vamp = float(cfg.extra("amplitude")), float(cfg.extra("v_amplitude"))
    s_raw = str(cfg.extra("s"))
    s = None if s_raw == "auto" else float(s_raw)
    constants = {}
    rows = []
    for N in (cfg.grid.N, int(cfg.extra("fine_N"))):
        g = make_grid(cfg.grid.n, N, cfg.grid.L)
        st = manufactured_state(g, amp, seed=cfg.seed)
        v = manufactured_state(g, vamp, seed=cfg.seed + 7).velocity()
        r = linear_convection_solve(SpectralField(g, st.a), SpectralField(g, st.d), v, params,
                                    _solver_config(cfg), s=s)
        constants[N] = r.max_constant
        res.measure(f"constant_N{N}", r.max_constant)
        res.measure(f"V_bar_N{N}", float(r.v_bar[-1]))
        rows += [(N, t, l, vb, c) for t, l, vb, c in zip(r.times, r.lhs, r.v_bar, r.constant)]
    (n1, c1), (n2, c2) = constants.items()
    factor = float(cfg.extra("stability_factor"))
    ok = c1 > 0 and c2 > 0 and math.isfinite(c1) and math.isfinite(c2) and max(c1 / c2, c2 / c1) < factor
    res.check("convected linear estimate constant stable under refinement", ok,
              f"C = {c1:.4g} (N={n1}), {c2:.4g} (N={n2}); factor < {factor:g}")
    p = cfg.solver.p
    n = cfg.grid.n
    g = make_grid(n, cfg.grid.N, cfg.grid.L)
    z = SpectralField.zeros(g)
    try:
        linear_convection_solve(z, z, SpectralField.zeros(g, 1), params, _solver_config(cfg), s=1 - n / p)
        rejected = False
    except ValueError:
        rejected = True
    res.check("admissibility guard rejects s = 1 - n/p", rejected, f"s = {1 - n / p:.4g}")
    with open(out.path("linear_convection.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "t", "lhs", "v_bar", "constant"])
        for N, t, l, vb, c in rows:
            w.writerow([N, "%.17g" % t, "%.17g" % l, "%.17g" % vb, "%.17g" % c])


def _initial_state(cfg) -> SolverState:
    g = make_grid(cfg.grid.n, cfg.grid.N, cfg.grid.L)
    amp = float(cfg.extra("amplitude"))
    init = cfg.extra("initial")
    if init == "random":
        return manufactured_state(g, amp, seed=cfg.seed)
    if init == "planar_shear":
        datum = make_oscillating(g, "planar_shear", float(cfg.extra("epsilon")))
        v = datum.field
        top = float(np.sqrt(np.sum(v.physical() ** 2, axis=0)).max())
        return SolverState.from_fields(SpectralField.zeros(g), v * (amp / top))
    raise ValueError(f"unknown initial data {init!r}; expected random or planar_shear")


def _solve(cfg, out, res) -> None:
    params, _ = _physics(cfg)
    state = _initial_state(cfg)
    result = solve(state, params, _solver_config(cfg), out_dir=out.dir)
    if cfg.solver.snapshot_stride > 0:
        res.files.append("run/")
    res.measure("status", result.status)
    res.measure("steps", result.steps)
    res.measure("final_time", result.state.t)
    res.measure("initial_norm", result.initial_norm)
    res.measure("measured_M", result.norm_ratio)
    res.measure("mass_drift", result.mass_drift)
    res.measure("min_density", result.min_density)
    res.check("run completes without blow-up or vacuum", result.status == "completed",
              result.message or f"reached t = {result.state.t:.6g}")
    limit = float(cfg.extra("max_ratio"))
    res.check("critical norm stays bounded by the data", result.norm_ratio < limit,
              f"M = {result.norm_ratio:.4g} < {limit:g}")
    tol = float(cfg.extra("mass_tolerance"))
    res.check("mass conservation", result.mass_drift < tol, f"drift {result.mass_drift:.3e} < {tol:g}")
    write_norm_history(result, out.path("norm_history.csv"))


DISPATCH = {
    "lp-check": _lp_check,
    "besov-norm": _besov_norm,
    "bony-check": _bony_check,
    "probe-estimates": _probe_estimates,
    "green-decay": _green_decay,
    "heat-decay": _heat_decay,
    "oscillation-scaling": _oscillation,
    "linear-convection": _linear_convection,
    "solve": _solve,
}


def run(cfg: ExperimentConfig, out_dir: str) -> RunOutcome:
    """Run one experiment into ``out_dir``; errors propagate with the kind attached."""
    os.makedirs(out_dir, exist_ok=True)
    outcome = RunOutcome(cfg.kind)
    t0 = time.perf_counter()
    try:
        DISPATCH[cfg.kind](cfg, _Output(out_dir, outcome), outcome)
    except Exception as exc:
        raise RuntimeError(f"experiment {cfg.kind} failed: {exc}") from exc
    outcome.elapsed = time.perf_counter() - t0
    write_report(cfg, outcome, os.path.join(out_dir, "report.txt"))
    return outcome


def write_report(cfg: ExperimentConfig, outcome: RunOutcome, path: str) -> None:
    passed = sum(c.passed for c in outcome.checks)
    lines = [f"besov-ns experiment: {cfg.kind}", "", "settings:"]
    lines += [f"  {s}" for s in cfg.lines()]
    lines += ["", "measurements:"]
    lines += [f"  {k} = {_fmt(v)}" for k, v in outcome.measurements]
    lines += ["", "checks:"]
    lines += [f"  {'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}" for c in outcome.checks]
    lines += ["", "files:"] + [f"  {f}" for f in outcome.files]
    lines += ["", f"summary: {passed}/{len(outcome.checks)} checks passed", ""]
    with open(path, "w") as fh:
        fh.write("\n".join(lines))
