import math

import numpy as np
import pytest
from conftest import rk4_matrix_exponential, system_matrix

from besov_ns import make_grid
from besov_ns.green import (eigenvalues, ghat, ghat_expansion, green_entries, decay_probe,
                            heat_decay_probe, heat_semigroup, lame_semigroup, propagate,
                            write_decay_csv)
from besov_ns.paraproduct import random_field
from besov_ns.spectral import SpectralField, forward, grad


class TestEigenvalues:
    def test_complex_pair(self):
        ev = eigenvalues(1.0, 1.0)
        assert complex(ev.lambda_plus) == pytest.approx(complex(-0.5, math.sqrt(3) / 2), abs=1e-15)
        assert complex(ev.lambda_minus) == pytest.approx(complex(-0.5, -math.sqrt(3) / 2), abs=1e-15)

    def test_vieta(self):
        r = np.array([0.3, 1.0, 2.0, 7.0, 1e3])
        nu = 0.8
        ev = eigenvalues(r, nu)
        assert np.allclose(ev.lambda_plus + ev.lambda_minus, -nu * r * r, rtol=1e-13)
        assert np.allclose(ev.lambda_plus * ev.lambda_minus, r * r, rtol=1e-12)


class TestGhat:
    def test_identity_at_zero_time(self):
        for r in (0.0, 0.5, 2.0, 40.0):
            assert np.array_equal(ghat(r, 0.0, 1.0), np.eye(2))

    def test_confluent_radius(self):
        for t in (0.1, 0.5, 2.0):
            assert ghat(2.0, t, 1.0)[0, 1] == pytest.approx(-2 * t * math.exp(-2 * t), rel=1e-12)

    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 2.0 + 1e-9, 5.0, 100.0])
    @pytest.mark.parametrize("nu", [1.0, 0.5])
    def test_rk4_oracle(self, r, nu):
        t = 0.5
        ref = rk4_matrix_exponential(system_matrix(r, nu), t, dt=min(1e-3, 0.5 / (nu * r * r)))
        assert np.max(np.abs(ghat(r, t, nu) - ref)) < 1e-9

    def test_antisymmetric_off_diagonal(self):
        r = np.linspace(0, 60, 301)
        _, g12, g21, _ = green_entries(r, 0.7, 1.3)
        assert np.max(np.abs(g12 + g21)) < 1e-15

    def test_large_radius_asymptotics(self):
        r, t = 100.0, 1.0
        G = ghat(r, t, 1.0)
        assert abs(G[0, 0] - math.exp(-t)) < 2 / r**2
        assert abs(G[0, 1]) * r == pytest.approx(math.exp(-t), rel=1e-3)

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            ghat(1.0, -0.1, 1.0)


class TestExpansion:
    @pytest.mark.parametrize("r", [10.0, 50.0, 500.0])
    def test_reconstruction(self, r):
        for t in (0.1, 1.0, 3.0):
            ex = ghat_expansion(np.array([r]), t, 1.0)
            assert np.max(np.abs(ex.assemble()[..., 0] - ghat(r, t, 1.0))) < 1e-10

    def test_requires_high_frequency(self):
        with pytest.raises(ValueError, match="high-frequency"):
            ghat_expansion(np.array([1.0]), 1.0, 1.0)


class TestFieldPropagators:
    def test_semigroup(self, grid2):
        a, d = random_field(grid2, seed=1), random_field(grid2, seed=2)
        a1, d1 = propagate(*propagate(a, d, 0.3, 1.0), 0.4, 1.0)
        a2, d2 = propagate(a, d, 0.7, 1.0)
        assert np.max(np.abs(a1.coeffs - a2.coeffs)) < 1e-14
        assert np.max(np.abs(d1.coeffs - d2.coeffs)) < 1e-14

    def test_heat_eigenfunction(self, grid2):
        x, y = grid2.coords
        f = forward(grid2, np.cos(3 * x) * np.sin(2 * y))
        out = heat_semigroup(f, 0.4, 0.5)
        assert np.max(np.abs(out.physical() - math.exp(-0.4 * 13 * 0.5) * f.physical())) < 1e-13

    def test_lame_splits_by_helmholtz_part(self, grid2):
        x, y = grid2.coords
        mu, lam, t = 0.3, 0.5, 0.2
        # div-free: (sin y, 0); gradient: grad cos(2x) = (-2 sin 2x, 0)
        shear = forward(grid2, np.stack([np.sin(y), np.zeros_like(y)]))
        pot = grad(forward(grid2, np.cos(2 * x)))
        out_s = lame_semigroup(shear, mu, lam, t)
        out_p = lame_semigroup(pot, mu, lam, t)
        assert np.max(np.abs(out_s.coeffs - math.exp(-mu * t) * shear.coeffs)) < 1e-15
        assert np.max(np.abs(out_p.coeffs - math.exp(-(lam + 2 * mu) * 4 * t) * pot.coeffs)) < 1e-15

    def test_lame_ellipticity(self, rand_vector):
        with pytest.raises(ValueError, match="non-elliptic"):
            lame_semigroup(rand_vector, 1.0, -2.5, 0.1)


class TestDecayProbes:
    def test_low_regime_rate(self):
        rep = decay_probe("low_L2", 0, nu_bar=1.0)
        assert rep.fit.slope == pytest.approx(-0.5, abs=1e-3)

    def test_high_g1_rate(self):
        rep = decay_probe("high_G1", 5, nu_bar=1.0)
        assert rep.fit.slope == pytest.approx(-1.0, rel=0.05)

    def test_ring_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            decay_probe("low_L2", 3, nu_bar=1.0)
        with pytest.raises(ValueError, match="mismatch"):
            decay_probe("high_G1", 1, nu_bar=1.0)

    def test_heat_decay_bracket(self):
        for j in (1, 2, 3):
            _, _, fit = heat_decay_probe(j)
            rate = -fit.slope / 4.0**j
            assert 0.75**2 <= rate <= (8 / 3) ** 2

    def test_csv(self, tmp_path):
        path = tmp_path / "decay.csv"
        write_decay_csv([decay_probe("low_L2", 0)], path)
        assert path.read_text().splitlines()[0].startswith("regime,j,t,norm")
