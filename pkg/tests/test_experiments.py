import math

import numpy as np
import pytest

from besov_ns.experiments.cli import main
from besov_ns.experiments.config import ConfigError, load_config, parse_config
from besov_ns.experiments.fitting import fit_rate


class TestConfig:
    def test_defaults(self):
        cfg = parse_config("[experiment]\nkind = lp-check\n")
        assert cfg.kind == "lp-check" and cfg.grid.N == 64 and cfg.seed == 42
        assert cfg.grid.L == pytest.approx(2 * math.pi)

    def test_kind_defaults_apply(self):
        cfg = parse_config("", kind="green-decay")
        assert (cfg.grid.n, cfg.grid.N) == (1, 256)

    def test_power_of_two_error_names_line(self):
        with pytest.raises(ConfigError, match="line 3: N must be a power of two"):
            parse_config("[grid]\nn = 2\nN = 100\n[experiment]\nkind = lp-check\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="line 3: duplicate key 'N'"):
            parse_config("[grid]\nN = 32\nN = 64\n", kind="lp-check")

    def test_unknown_key_and_section(self):
        with pytest.raises(ConfigError, match="unknown key 'M'"):
            parse_config("[grid]\nM = 32\n", kind="lp-check")
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config("[mesh]\nN = 32\n", kind="lp-check")

    def test_missing_kind(self):
        with pytest.raises(ConfigError, match="missing required field"):
            parse_config("[grid]\nN = 32\n")

    def test_kind_conflict(self):
        with pytest.raises(ConfigError, match="conflicts"):
            parse_config("[experiment]\nkind = solve\n", kind="lp-check")

    def test_overrides(self):
        cfg = parse_config("[grid]\nN = 32\n", ["grid.N=128", "physics.mu = 2", "grid.L=pi"], kind="solve")
        assert cfg.grid.N == 128 and cfg.physics.mu == 2.0 and cfg.grid.L == pytest.approx(math.pi)
        with pytest.raises(ConfigError, match="--set grid.N: N must be a power of two"):
            parse_config("", ["grid.N=48"], kind="solve")

    def test_experiment_keys(self):
        cfg = parse_config("[experiment]\nkind = solve\namplitude = 1e-4\nseed = 7\n")
        assert cfg.extra("amplitude") == 1e-4 and cfg.seed == 7
        with pytest.raises(ConfigError, match="unknown key 'pairs'"):
            parse_config("[experiment]\nkind = solve\npairs = 3\n")

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[experiment]\nkind = heat-decay\n[physics]\nlambda = 0.5\n")
        cfg = load_config(str(path))
        assert cfg.physics.lambda_ == 0.5
        assert "[physics] lambda = 0.5" in cfg.lines()


class TestFitRate:
    def test_exact_line(self):
        fit = fit_rate([0, 1, 2, 3], [1.0, 3.0, 5.0, 7.0])
        assert fit.slope == pytest.approx(2.0) and fit.intercept == pytest.approx(1.0)
        assert fit.r_squared == 1.0

    def test_against_numpy_polyfit(self):
        rng = np.random.default_rng(0)
        x = np.linspace(0, 1, 20)
        y = -0.7 * x + 0.2 + 0.01 * rng.standard_normal(20)
        slope, intercept = np.polyfit(x, y, 1)
        fit = fit_rate(x, y)
        assert fit.slope == pytest.approx(slope) and fit.intercept == pytest.approx(intercept)
        assert 0.9 < fit.r_squared < 1.0

    def test_errors(self):
        with pytest.raises(ValueError, match="at least 3"):
            fit_rate([0, 1], [0, 1])
        with pytest.raises(ValueError, match="degenerate"):
            fit_rate([1, 1, 1], [0, 1, 2])
        with pytest.raises(ValueError, match="finite"):
            fit_rate([0, 1, 2], [0, np.nan, 2])


class TestCli:
    def test_lp_check(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["lp-check", "--out", str(out), "--set", "experiment.pairs=5"]) == 0
        assert "PASS  partition of unity" in capsys.readouterr().out
        report = (out / "report.txt").read_text()
        assert "[grid] N = 64" in report and "FAIL" not in report

    def test_same_seed_same_bytes(self, tmp_path):
        args = ["bony-check", "--set", "experiment.pairs=4", "--set", "grid.N=32"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "bony_residuals.csv").read_bytes()
        assert a == (tmp_path / "b" / "bony_residuals.csv").read_bytes()

    def test_green_decay(self, tmp_path):
        assert main(["green-decay", "--out", str(tmp_path)]) == 0
        rows = (tmp_path / "decay.csv").read_text().splitlines()
        low = [r.split(",") for r in rows[1:] if r.startswith("low_L2")]
        assert float(low[0][4]) == pytest.approx(-0.5, abs=1e-3)

    def test_config_error_exit_code(self, tmp_path, capsys):
        assert main(["solve", "--set", "grid.N=100", "--out", str(tmp_path)]) == 2
        assert "N must be a power of two" in capsys.readouterr().err

    def test_small_solve(self, tmp_path):
        code = main(["solve", "--out", str(tmp_path), "--set", "grid.N=16", "--set", "solver.T_end=0.5",
                     "--set", "solver.dt=0.1"])
        assert code == 0 and (tmp_path / "norm_history.csv").exists()
