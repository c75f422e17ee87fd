"""INI experiment configuration with typed defaults and line-numbered errors."""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, fields, replace

KINDS = ("lp-check", "besov-norm", "bony-check", "probe-estimates", "green-decay", "heat-decay",
         "oscillation-scaling", "linear-convection", "solve")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSection:
    n: int = 2
    N: int = 64
    L: float = 2 * math.pi


@dataclass(frozen=True)
class PhysicsSection:
    rho_bar: float = 1.0
    mu: float = 0.5
    lambda_: float = 0.0
    gamma: float = 1.4


@dataclass(frozen=True)
class SolverSection:
    dt: float = 0.05
    T_end: float = 10.0
    dealias: bool = True
    monitor_stride: int = 4
    snapshot_stride: int = 0
    p: float = 3.0


# Per-kind experiment keys and their defaults.
EXPERIMENT_KEYS: dict = {
    "lp-check": {"pairs": 100},
    "besov-norm": {"s": 0.5, "p": 2.0, "q": 1.0, "decay": 1.0},
    "bony-check": {"pairs": 100},
    "probe-estimates": {"probe": "all", "samples": 100, "fine_N": 128, "stability_factor": 4.0},
    "green-decay": {"low_j": 0, "high_rings": "4,5,6", "decay_N": 256},
    "heat-decay": {"rings": "1,2,3", "nu": 1.0},
    "oscillation-scaling": {"exponents": "4,8", "eps_min_power": 2, "eps_max_power": 5,
                            "oscillation": "scalar_modulated", "threshold": 0.5},
    "linear-convection": {"amplitude": 0.01, "v_amplitude": 0.05, "s": "auto", "fine_N": 128,
                          "stability_factor": 2.0},
    "solve": {"amplitude": 1e-3, "initial": "random", "epsilon": 0.25, "max_ratio": 100.0,
              "mass_tolerance": 1e-8},
}

# Grid/solver values that differ from the section defaults for some kinds.
KIND_OVERRIDES: dict = {
    "heat-decay": {("grid", "n"): 1, ("grid", "N"): 256},
    "green-decay": {("grid", "n"): 1, ("grid", "N"): 256},
    "oscillation-scaling": {("grid", "N"): 256},
    "linear-convection": {("solver", "dt"): 0.02, ("solver", "T_end"): 2.0,
                          ("solver", "monitor_stride"): 2},
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int = 42
    grid: GridSection = field(default_factory=GridSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    solver: SolverSection = field(default_factory=SolverSection)
    extras: dict = field(default_factory=dict)

    def extra(self, key: str):
        return self.extras[key]

    def lines(self) -> list[str]:
        """Canonical key = value listing of every setting, for reports."""
        out = [f"[experiment] kind = {self.kind}", f"[experiment] seed = {self.seed}"]
        for name, sec in (("grid", self.grid), ("physics", self.physics), ("solver", self.solver)):
            for f in fields(sec):
                out.append(f"[{name}] {_ini_name(f.name)} = {getattr(sec, f.name)}")
        for k in sorted(self.extras):
            out.append(f"[experiment] {k} = {self.extras[k]}")
        return out


def _ini_name(attr: str) -> str:
    return "lambda" if attr == "lambda_" else attr


def _attr_name(key: str) -> str:
    return "lambda_" if key == "lambda" else key


SECTIONS = {"grid": GridSection, "physics": PhysicsSection, "solver": SolverSection}


def _parse_float(text: str) -> float:
    t = text.strip().replace(" ", "")
    m = re.fullmatch(r"([-+]?[0-9.eE+-]*)\*?pi", t)
    if m:
        factor = m.group(1)
        return (float(factor) if factor not in ("", "+", "-") else float(factor + "1")) * math.pi
    return float(t)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _convert(raw: str, default):
    if isinstance(default, bool):
        return _parse_bool(raw)
    if isinstance(default, int):
        value = _parse_float(raw)
        if value != int(value):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(value)
    if isinstance(default, float):
        return _parse_float(raw)
    return raw.strip()


def _key_lines(text: str) -> dict:
    """Map (section, key) -> 1-based line number of its definition."""
    out = {}
    section = None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"([^=:]+)[=:]", s)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip()), i)
    return out


def _validate(cfg: ExperimentConfig, where) -> None:
    g, ph, so = cfg.grid, cfg.physics, cfg.solver

    def fail(section, key, msg):
        raise ConfigError(f"{where(section, key)}{msg}")

    if g.n not in (1, 2, 3):
        fail("grid", "n", f"n must be 1, 2 or 3, got {g.n}")
    if g.N < 8 or g.N & (g.N - 1):
        fail("grid", "N", "N must be a power of two")
    if not g.L > 0:
        fail("grid", "L", "L must be positive")
    if not ph.rho_bar > 0:
        fail("physics", "rho_bar", "rho_bar must be positive")
    if not ph.mu > 0:
        fail("physics", "mu", "mu must be positive")
    if not ph.lambda_ + 2 * ph.mu > 0:
        fail("physics", "lambda", "lambda + 2 mu must be positive")
    if not so.dt > 0:
        fail("solver", "dt", "dt must be positive")
    if not so.T_end >= so.dt:
        fail("solver", "T_end", "T_end must be at least dt")
    if so.monitor_stride < 1:
        fail("solver", "monitor_stride", "monitor_stride must be >= 1")
    if so.snapshot_stride < 0:
        fail("solver", "snapshot_stride", "snapshot_stride must be >= 0")
    if not so.p >= 2:
        fail("solver", "p", "p must be >= 2")


def parse_config(text: str, overrides=(), kind: str | None = None) -> ExperimentConfig:
    """Parse INI text into a fully defaulted ExperimentConfig.

    ``overrides`` are "section.key=value" strings applied after the file;
    ``kind`` (from the command line) must agree with [experiment] kind if both
    are present.
    """
    cp = configparser.ConfigParser(strict=True, interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate key {exc.option!r} in [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    lines = _key_lines(text)
    values: dict = {}
    origin: dict = {}
    for section in cp.sections():
        sec = section.lower()
        if sec not in SECTIONS and sec != "experiment":
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            values[(sec, key)] = raw
            origin[(sec, key)] = f"line {lines.get((section, key), lines.get((sec, key), '?'))}: "
    for item in overrides:
        m = re.fullmatch(r"\s*([A-Za-z_]+)\.([A-Za-z_]+)\s*=(.*)", item)
        if not m:
            raise ConfigError(f"--set {item!r}: expected section.key=value")
        sec, key, raw = m.group(1).lower(), m.group(2), m.group(3).strip()
        if sec not in SECTIONS and sec != "experiment":
            raise ConfigError(f"--set {item!r}: unknown section [{sec}]")
        values[(sec, key)] = raw
        origin[(sec, key)] = f"--set {sec}.{key}: "

    def where(sec, key):
        k = (sec, key)
        return origin.get(k, origin.get((sec, _attr_name(key)), ""))

    file_kind = values.pop(("experiment", "kind"), None)
    if file_kind is not None and kind is not None and file_kind.strip() != kind:
        raise ConfigError(f"{where('experiment', 'kind')}kind {file_kind.strip()!r} conflicts "
                          f"with command-line kind {kind!r}")
    kind = kind or (file_kind.strip() if file_kind else None)
    if kind is None:
        raise ConfigError("missing required field: [experiment] kind")
    if kind not in KINDS:
        raise ConfigError(f"{where('experiment', 'kind')}unknown experiment kind {kind!r}; "
                          f"expected one of {', '.join(KINDS)}")

    built = {}
    for sec, cls in SECTIONS.items():
        inst = cls()
        for (s, attr), v in KIND_OVERRIDES.get(kind, {}).items():
            if s == sec:
                inst = replace(inst, **{attr: v})
        names = {_ini_name(f.name): f.name for f in fields(cls)}
        updates = {}
        for (s, key), raw in values.items():
            if s != sec:
                continue
            if key not in names:
                raise ConfigError(f"{origin[(s, key)]}unknown key {key!r} in [{sec}]")
            attr = names[key]
            try:
                updates[attr] = _convert(raw, getattr(inst, attr))
            except ValueError as exc:
                raise ConfigError(f"{origin[(s, key)]}bad value for {key}: {exc}") from None
        built[sec] = replace(inst, **updates)

    seed = 42
    extras = dict(EXPERIMENT_KEYS[kind])
    for (s, key), raw in values.items():
        if s != "experiment":
            continue
        try:
            if key == "seed":
                seed = _convert(raw, 0)
            elif key in extras:
                extras[key] = _convert(raw, extras[key])
            else:
                raise ConfigError(f"{origin[(s, key)]}unknown key {key!r} in [experiment] "
                                  f"for kind {kind}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{origin[(s, key)]}bad value for {key}: {exc}") from None

    cfg = ExperimentConfig(kind, seed, built["grid"], built["physics"], built["solver"], extras)
    _validate(cfg, where)
    return cfg


def load_config(path: str | None, overrides=(), kind: str | None = None) -> ExperimentConfig:
    text = ""
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_config(text, overrides, kind)
