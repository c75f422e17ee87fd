import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besov_ns import make_grid
from besov_ns.lp import (ProfileParams, bernstein_probe, build_dyadic_system, decompose, delta_j,
                         orthogonality_error, partition_error, s_j, uncovered_energy)
from besov_ns.paraproduct import random_field
from besov_ns.spectral import SpectralField, forward


class TestProfile:
    def test_partition_at_ring_centres(self, sys2):
        for j in sys2.j_values:
            r = 2.0**j
            val = float(sys2.phi(1.0))
            assert 0 < val <= 1
            total = sum(float(sys2.phi(r * 2.0**-k)) for k in range(j - 6, j + 7))
            assert total == pytest.approx(1.0, abs=1e-14)

    def test_phi_vanishes_below_support(self, sys2):
        assert float(sys2.phi(0.5)) == 0.0

    def test_chi_flat_near_origin(self, sys2):
        assert float(sys2.chi(0.5)) == 1.0

    def test_flat_radius_is_clamped(self):
        assert ProfileParams(2.0).clamped().flat_radius == 1.25
        assert ProfileParams(0.1).clamped().flat_radius == 0.75

    @settings(max_examples=10, deadline=None)
    @given(st.sampled_from([1, 2, 3]), st.sampled_from([8, 16, 32]), st.floats(0.75, 1.25))
    def test_partition_property(self, n, N, flat):
        sys = build_dyadic_system(make_grid(n, N), ProfileParams(flat))
        assert partition_error(sys) < 1e-10
        assert orthogonality_error(sys) < 1e-12


class TestBlocks:
    def test_single_mode(self):
        g = make_grid(2, 64)
        sys = build_dyadic_system(g)
        j = 2
        f = forward(g, np.cos(2.0**j * g.coords[0]))
        d = delta_j(sys, f, j)
        assert d.coeffs[4, 0] == pytest.approx(0.5 * float(sys.phi(1.0)))
        assert np.max(np.abs(delta_j(sys, f, j + 3).coeffs)) < 1e-15

    def test_orthogonality_on_field(self, sys2, rand_scalar):
        for j in sys2.j_values:
            for k in sys2.j_values:
                if abs(j - k) >= 2:
                    out = delta_j(sys2, delta_j(sys2, rand_scalar, k), j)
                    assert np.max(np.abs(out.coeffs)) < 1e-12

    def test_zero_field(self, sys2, grid2):
        assert np.max(np.abs(delta_j(sys2, SpectralField.zeros(grid2), 0).coeffs)) == 0

    def test_out_of_range(self, sys2, rand_scalar):
        with pytest.raises(ValueError, match="outside range"):
            delta_j(sys2, rand_scalar, sys2.j_max + 1)

    def test_reconstruction(self, sys2, rand_scalar):
        rel = uncovered_energy(sys2, rand_scalar) / np.linalg.norm(rand_scalar.coeffs)
        assert rel < 1e-12
        rec = decompose(sys2, rand_scalar).reconstruct()
        assert np.max(np.abs(rec.coeffs - rand_scalar.coeffs)) < 1e-12


class TestLowPass:
    def test_constant_preserved(self, sys2, grid2):
        f = forward(grid2, 2.0 * np.ones(grid2.shape))
        assert np.allclose(s_j(sys2, f, 0).coeffs, f.coeffs)

    def test_telescoping(self, sys2, rand_scalar):
        lhs = s_j(sys2, rand_scalar, 4).coeffs - s_j(sys2, rand_scalar, 1).coeffs
        rhs = sum(delta_j(sys2, rand_scalar, k).coeffs for k in range(1, 4))
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_kills_high_mode(self, sys2, grid2):
        j = 1
        f = forward(grid2, np.cos(2.0 ** (j + 2) * grid2.coords[0]))
        assert np.max(np.abs(s_j(sys2, f, j).coeffs)) < 1e-15


class TestBernstein:
    def test_single_mode_derivative(self):
        g = make_grid(2, 64)
        sys = build_dyadic_system(g)
        for j in (0, 1, 2, 3):
            f = delta_j(sys, forward(g, np.cos(2.0**j * g.coords[0])), j)
            rep = bernstein_probe(sys, f, j, 2, 2, gamma=(1, 0))
            assert rep.ratio <= 8 / 3

    def test_constant(self, sys2, grid2):
        f = forward(grid2, np.ones(grid2.shape))
        assert bernstein_probe(sys2, f, 0, 2, 2).ratio == pytest.approx(1.0)

    @pytest.mark.parametrize("p,q,gamma", [(2, 2, (1, 0)), (2, 4, (1, 0)), (2, math.inf, (0, 0))])
    def test_uniform_in_j(self, sys2, grid2, p, q, gamma):
        # a spike localized to ring j is the extremal case when p < q
        spike = SpectralField(grid2, np.ones(grid2.shape) / grid2.N**2)
        ratios = []
        for j in sys2.j_values:
            if sys2.is_truncated(j):
                continue
            f = delta_j(sys2, spike if p < q else random_field(grid2, seed=j + 10, kmax=31), j)
            ratios.append(bernstein_probe(sys2, f, j, p, q, gamma=gamma).ratio)
        assert max(ratios) / min(ratios) < 2

    def test_rejects_p_above_q(self, sys2, rand_scalar):
        with pytest.raises(ValueError):
            bernstein_probe(sys2, rand_scalar, 0, 4, 2)
