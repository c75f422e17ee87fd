import math

import numpy as np
import pytest

from besov_ns import make_grid
from besov_ns.green import propagate
from besov_ns.ns.hodge import hodge_reconstruct, hodge_split
from besov_ns.ns.linear import check_admissible_exponents, linear_convection_solve
from besov_ns.ns.params import PhysicsParams, nondimensionalize
from besov_ns.ns.solver import (BlowUpError, SolverConfig, SolverState, Stepper, manufactured_state,
                                nonlinear_rhs, phi_matrices, solve, step, write_norm_history)
from besov_ns.paraproduct import VacuumError, random_field
from besov_ns.spectral import SpectralField, forward, grad
from scipy.linalg import expm


class TestParams:
    def test_isothermal_sound_speed(self):
        assert PhysicsParams(1.0, 0.0, gamma=1.0).varpi == 1.0

    def test_nondimensionalize(self):
        params, resc = nondimensionalize(2.0, 1.0, 0.0, gamma=1.4)
        assert params.nu_bar == pytest.approx(1.0)
        assert resc.time_to_physical(resc.time_to_solver(0.3)) == pytest.approx(0.3)

    def test_pressure_perturbation_vanishes_for_gamma_two(self):
        assert np.all(PhysicsParams(1.0, 0.0, gamma=2.0).K(np.linspace(-0.5, 0.5, 5)) == 0.0)

    def test_ellipticity(self):
        with pytest.raises(ValueError, match="ellipticity"):
            PhysicsParams(1.0, -3.0)
        with pytest.raises(ValueError, match="ellipticity"):
            PhysicsParams(0.0, 1.0)


class TestHodge:
    def test_round_trip(self, grid2, rand_vector):
        v = rand_vector + forward(grid2, np.stack([np.full(grid2.shape, 0.3), np.full(grid2.shape, -0.1)]))
        d, om, mean = hodge_split(v)
        assert np.max(np.abs(hodge_reconstruct(d, om, mean).coeffs - v.coeffs)) < 1e-15
        assert mean == pytest.approx([0.3, -0.1])

    def test_gradient_has_no_rotation(self, grid2, rand_scalar):
        _, om, _ = hodge_split(grad(rand_scalar))
        assert np.max(np.abs(om.coeffs)) < 1e-15

    def test_shear_has_no_divergence(self, grid2):
        d, om, _ = hodge_split(forward(grid2, np.stack([np.sin(grid2.coords[1]), np.zeros(grid2.shape)])))
        assert np.max(np.abs(d.coeffs)) < 1e-15 and np.max(np.abs(om.coeffs)) > 0.1

    def test_rejects_scalar(self, rand_scalar):
        with pytest.raises(ValueError):
            hodge_split(rand_scalar)


def _analytic_rhs(N, eps, params):
    """Nonlinear terms for a = eps cos y, v = (sin x, 0), evaluated pointwise."""
    x1 = 2 * np.pi * np.arange(N) / N
    x, y = np.meshgrid(x1, x1, indexing="ij")
    k1 = np.fft.fftfreq(N, 1.0 / N)
    kx, ky = np.meshgrid(k1, k1, indexing="ij")
    r = np.hypot(kx, ky)
    inv = np.where(r > 0, 1 / np.where(r > 0, r, 1), 0)
    fft = lambda f: np.fft.fftn(f) / N**2
    a = eps * np.cos(y)
    L = a / (1 + a)
    K = (1 + a) ** (params.gamma - 2) - 1
    m1 = [np.sin(x) * np.cos(x) - params.nu_bar * L * np.sin(x), np.zeros_like(x)]
    m = [m1[0], -eps * K * np.sin(y)]
    m1h = [fft(c) for c in m1]
    mh = [fft(c) for c in m]
    F = fft(-a * np.cos(x))
    G = fft(-np.sin(x) ** 2) - inv * (1j * kx * mh[0] + 1j * ky * mh[1])
    H01 = -inv * (1j * ky * m1h[0] - 1j * kx * m1h[1])
    mean = -np.array([mh[0][0, 0].real, mh[1][0, 0].real])
    return F, G, H01, mean


class TestNonlinearTerms:
    def test_against_pointwise_oracle(self):
        N, eps = 32, 0.2
        g = make_grid(2, N)
        params = PhysicsParams(0.5, 0.1, gamma=1.4)
        x, y = g.coords
        state = SolverState.from_fields(forward(g, eps * np.cos(y)),
                                        forward(g, np.stack([np.sin(x), np.zeros(g.shape)])))
        terms = nonlinear_rhs(state, params)
        F, G, H01, mean = _analytic_rhs(N, eps, params)
        nz = g.xi_norm > 0
        assert np.max(np.abs(terms.F.coeffs - F)) < 1e-14
        assert np.max(np.abs((terms.G.coeffs - G)[nz])) < 1e-14
        assert np.max(np.abs(terms.H.coeffs[0, 1] - H01)) < 1e-14
        assert np.max(np.abs(terms.H.coeffs[0, 1] + terms.H.coeffs[1, 0])) == 0.0
        assert np.allclose(terms.mean_force, mean, atol=1e-15)

    def test_zero_velocity_zero_mass_source(self, grid2, rand_scalar):
        a = rand_scalar * (0.1 / float(np.max(np.abs(rand_scalar.physical()))))
        state = SolverState.from_fields(a, SpectralField.zeros(grid2, rank=1))
        assert np.max(np.abs(nonlinear_rhs(state, PhysicsParams(0.5, 0.0)).F.coeffs)) == 0.0


class TestPhiFunctions:
    def test_against_augmented_exponential_formula(self):
        r, h, nu = np.array([0.5, 2.0, 9.0]), 0.1, 1.0
        E, p1, p2 = phi_matrices(r, h, nu)
        for i, ri in enumerate(r):
            A = h * np.array([[0.0, -ri], [ri, -nu * ri * ri]])
            assert np.allclose(E[i], expm(A), atol=1e-14)
            # phi1(A) = A^-1 (e^A - I), phi2(A) = A^-1 (phi1(A) - I)
            inv = np.linalg.inv(A)
            ph1 = inv @ (expm(A) - np.eye(2))
            assert np.allclose(p1[i], ph1, atol=1e-12)
            assert np.allclose(p2[i], inv @ (ph1 - np.eye(2)), atol=1e-12)


class TestSolver:
    params = PhysicsParams(0.5, 0.0)

    def test_zero_data_stays_zero(self, grid2):
        res = solve(SolverState.zeros(grid2), self.params, SolverConfig(dt=0.1, T_end=0.5))
        assert res.status == "completed"
        assert np.max(np.abs(res.state.a)) == 0.0 and np.max(np.abs(res.state.d)) == 0.0

    def test_tiny_data_follows_linear_propagator(self):
        g = make_grid(2, 32)
        st = manufactured_state(g, 1e-8)
        res = solve(st, self.params, SolverConfig(dt=0.05, T_end=1.0))
        a, d = propagate(SpectralField(g, st.a), SpectralField(g, st.d), 1.0, self.params.nu_bar)
        err = np.max(np.abs(res.state.a - a.coeffs)) + np.max(np.abs(res.state.d - d.coeffs))
        assert err / np.max(np.abs(st.a)) < 1e-6

    def test_second_order_in_time(self):
        g = make_grid(2, 32)
        st = manufactured_state(g, 0.1)
        ref = solve(st, self.params, SolverConfig(dt=0.005, T_end=0.4)).state
        errs = []
        for dt in (0.1, 0.05, 0.025):
            s = solve(st, self.params, SolverConfig(dt=dt, T_end=0.4)).state
            errs.append(np.max(np.abs(s.a - ref.a)) + np.max(np.abs(s.d - ref.d)))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(np.abs(orders - 2) < 0.25)

    def test_mass_conserved(self):
        g = make_grid(2, 32)
        res = solve(manufactured_state(g, 0.05), self.params, SolverConfig(dt=0.05, T_end=1.0))
        assert res.mass_drift < 1e-14

    def test_vacuum_halts(self, grid2):
        a = forward(grid2, 0.9995 * np.cos(grid2.coords[0]))
        init = (a, SpectralField.zeros(grid2, rank=1))
        res = solve(init, self.params, SolverConfig(dt=0.01, T_end=0.1))
        assert res.status == "vacuum" and "vacuum" in res.message
        with pytest.raises(VacuumError):
            solve(init, self.params, SolverConfig(dt=0.01, T_end=0.1), raise_on_failure=True)

    def test_non_finite_state_is_blow_up(self, grid2):
        st = SolverState.zeros(grid2)
        st.a[1, 0] = np.nan
        with pytest.raises(BlowUpError, match="blow-up"):
            Stepper(grid2, self.params).step(st, 0.01)
        assert solve(st, self.params, SolverConfig(dt=0.01, T_end=0.1)).status == "blow-up"

    def test_step_enforces_advective_bound(self, grid2):
        st = manufactured_state(grid2, 1.0)
        with pytest.raises(ValueError, match="advective"):
            step(st, self.params, 1.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(dt=0.0)
        with pytest.raises(ValueError):
            SolverConfig(dt=0.1, T_end=0.05)

    def test_history_and_snapshots(self, tmp_path):
        g = make_grid(2, 16)
        res = solve(manufactured_state(g, 1e-3), self.params,
                    SolverConfig(dt=0.1, T_end=0.3, snapshot_stride=1), out_dir=tmp_path)
        path = tmp_path / "hist.csv"
        write_norm_history(res, path)
        rows = path.read_text().splitlines()
        assert rows[0] == "t,j,a_l2,a_l3,d_l2,d_l3,e_norm"
        assert len(rows) == 1 + len(res.times) * len(res.series_a.js)
        assert (tmp_path / "run" / "3.omega.sfld").exists()


class TestLinearConvection:
    def test_zero_velocity_matches_propagator(self):
        g = make_grid(2, 32)
        params = PhysicsParams(0.5, 0.0)
        a0, d0 = random_field(g, seed=1), random_field(g, seed=2)
        res = linear_convection_solve(a0, d0, SpectralField.zeros(g, rank=1), params,
                                      SolverConfig(dt=0.05, T_end=0.5))
        a, d = propagate(a0, d0, 0.5, params.nu_bar)
        assert np.max(np.abs(res.a.coeffs - a.coeffs)) < 1e-13
        assert np.max(np.abs(res.d.coeffs - d.coeffs)) < 1e-13

    def test_constant_is_finite(self):
        g = make_grid(2, 32)
        params = PhysicsParams(0.5, 0.0)
        v = random_field(g, seed=3, rank=1, decay=2.0) * 0.05
        res = linear_convection_solve(random_field(g, seed=1) * 0.01, random_field(g, seed=2) * 0.01, v,
                                      params, SolverConfig(dt=0.05, T_end=0.5))
        assert np.isfinite(res.max_constant) and res.max_constant > 0

    def test_guard(self):
        with pytest.raises(ValueError, match="need s > 1 - n/p"):
            check_admissible_exponents(2, 3.0, 1 - 2 / 3)
        with pytest.raises(ValueError, match="need 2 <= p"):
            check_admissible_exponents(2, 4.0, 0.5)
        check_admissible_exponents(3, 3.0, 1.0)
