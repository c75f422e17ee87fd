import io
import math

import numpy as np
import pytest

from besov_ns import make_grid
from besov_ns.fieldio import FieldFormatError, MAGIC, read_field, to_bytes, write_field
from besov_ns.spectral import (Multiplier, SpectralField, apply_multiplier, curl, div, forward, grad,
                               inverse, lam, lambda_power, laplacian, lebesgue_norm, transform)


class TestGrid:
    def test_frequencies_unit_spacing(self):
        g = make_grid(2, 64)
        assert g.modes.min() == -32 and g.modes.max() == 31
        k = np.unique(g.wavevectors[0])
        assert np.allclose(np.diff(k), 1.0)

    def test_smallest_grid(self):
        g = make_grid(1, 8)
        assert g.shape == (8,)

    def test_spacing_for_larger_box(self):
        g = make_grid(2, 64, 4 * math.pi)
        k = np.unique(g.wavevectors[0])
        assert np.allclose(np.diff(k), 0.5)

    @pytest.mark.parametrize("n,N,L", [(4, 64, 1.0), (2, 100, 1.0), (2, 4, 1.0), (2, 64, -1.0)])
    def test_invalid(self, n, N, L):
        with pytest.raises(ValueError):
            make_grid(n, N, L)

    def test_j_range_covers_corner(self):
        g = make_grid(2, 64)
        assert g.j_range == (-1, 5)


class TestTransform:
    def test_cosine_has_two_half_coefficients(self):
        g = make_grid(2, 16)
        f = forward(g, np.cos(g.coords[0]))
        nz = np.argwhere(np.abs(f.coeffs) > 1e-14)
        assert len(nz) == 2
        assert np.allclose(f.coeffs[1, 0], 0.5) and np.allclose(f.coeffs[-1, 0], 0.5)

    def test_constant(self):
        g = make_grid(2, 16)
        f = forward(g, np.ones(g.shape))
        assert f.coeffs[0, 0] == pytest.approx(1.0)
        assert np.count_nonzero(np.abs(f.coeffs) > 1e-14) == 1

    def test_round_trip(self, grid2):
        rng = np.random.default_rng(0)
        vals = rng.standard_normal((2,) + grid2.shape)
        back = inverse(forward(grid2, vals))
        assert np.max(np.abs(back - vals)) < 1e-12

    def test_dispatch(self, grid2):
        vals = np.sin(grid2.coords[1])
        sf = transform(vals, "forward", grid2)
        assert np.allclose(transform(sf, "inverse"), vals)
        with pytest.raises(ValueError):
            transform(vals, "sideways", grid2)

    def test_shape_mismatch(self, grid2):
        with pytest.raises(ValueError):
            forward(grid2, np.zeros((3, 3)))


class TestMultipliers:
    def test_lambda_eigenfunction(self):
        g = make_grid(2, 16)
        f = forward(g, np.cos(g.coords[0]))
        assert np.allclose(lam(f).physical(), np.cos(g.coords[0]), atol=1e-14)

    def test_inverse_lambda_kills_constant(self):
        g = make_grid(2, 16)
        f = forward(g, 3 * np.ones(g.shape))
        assert np.max(np.abs(apply_multiplier(f, lambda_power(-1)).coeffs)) == 0.0

    def test_composition_identity(self, rand_scalar):
        back = lam(lam(rand_scalar, -1.0), 1.0)
        assert np.max(np.abs(back.coeffs - rand_scalar.coeffs)) < 1e-12

    def test_matrix_multiplier_needs_vector(self, rand_scalar):
        proj = Multiplier(lambda g: np.eye(g.n)[:, :, None, None] * np.ones(g.shape))
        with pytest.raises(ValueError, match="rank mismatch"):
            apply_multiplier(rand_scalar, proj)


class TestDifferential:
    def test_grad_sine(self):
        g = make_grid(2, 16)
        out = grad(forward(g, np.sin(g.coords[0]))).physical()
        assert np.allclose(out[0], np.cos(g.coords[0]), atol=1e-13)
        assert np.allclose(out[1], 0.0, atol=1e-13)

    def test_curl_of_gradient(self, rand_scalar):
        assert np.max(np.abs(curl(grad(rand_scalar)).coeffs)) < 1e-12

    def test_vector_identity(self, rand_vector):
        lhs = laplacian(rand_vector.component(0)).coeffs, laplacian(rand_vector.component(1)).coeffs
        lap = np.stack(lhs)
        out = lap - grad(div(rand_vector)).coeffs - div(curl(rand_vector)).coeffs
        assert np.max(np.abs(out)) < 1e-12


class TestNorms:
    def test_constant(self, grid2):
        f = forward(grid2, 2.5 * np.ones(grid2.shape))
        assert lebesgue_norm(f, 2) == pytest.approx(2.5 * grid2.L, rel=1e-14)

    def test_sine_l2(self):
        g = make_grid(1, 64)
        assert lebesgue_norm(np.sin(g.coords[0]), 2, g) == pytest.approx(math.sqrt(math.pi), rel=1e-13)

    def test_sine_sup(self):
        g = make_grid(1, 64)
        assert lebesgue_norm(np.sin(g.coords[0]), math.inf, g) == pytest.approx(1.0, abs=1e-3)

    def test_rejects_p_below_one(self, rand_scalar):
        with pytest.raises(ValueError):
            lebesgue_norm(rand_scalar, 0.5)


class TestFieldIO:
    def test_round_trip_bitwise(self, rand_vector):
        buf = io.BytesIO()
        write_field(rand_vector, buf)
        buf.seek(0)
        back = read_field(buf)
        assert back.grid == rand_vector.grid
        assert back.coeffs.tobytes() == rand_vector.coeffs.tobytes()

    def test_bad_magic(self, rand_scalar):
        data = bytearray(to_bytes(rand_scalar))
        data[0] ^= 0xFF
        with pytest.raises(FieldFormatError, match="bad magic"):
            read_field(io.BytesIO(bytes(data)))

    def test_truncated(self, rand_scalar):
        data = to_bytes(rand_scalar)[:-8]
        with pytest.raises(FieldFormatError, match="truncated"):
            read_field(io.BytesIO(data))

    def test_grid_mismatch(self, rand_scalar):
        with pytest.raises(FieldFormatError, match="grid mismatch"):
            read_field(io.BytesIO(to_bytes(rand_scalar)), grid=make_grid(2, 32))

    def test_little_endian_golden_header(self):
        g = make_grid(1, 8)
        sf = SpectralField(g, np.zeros(8))
        data = to_bytes(sf)
        assert data.startswith(MAGIC)
        # n = 1, rank 0, N = 8 little-endian, L = 2 pi as little-endian float64
        head = data[len(MAGIC):]
        assert head[0] == 1 and head[2:6] == (8).to_bytes(4, "little")
        assert head[6:14] == np.float64(2 * math.pi).astype("<f8").tobytes()
