import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwscatter.green import (
    GreenKernel, Side, SpectralPoint, apply_R, apply_R0, assemble_boundary_system,
    boundary_source, boundary_system, green0,
)
from qwscatter.lattice import (
    CoinField, GridField, V_of_evaluator, Window, apply_free_walk, apply_walk, walk_evaluator,
)
from qwscatter.linalg import IllConditionedWarning, SingularSystem, lu_factor, solve_complex_dense

from conftest import theta_grid

# frozen regression value: 1-norm condition estimate of I + V R0 for
# example1, n0 = 1, theta = 0.7, +i0
CONDITION_EXAMPLE1 = 157.2178750495242


def fft_kernel_left(theta, side, xs, eps=0.01, n=2 ** 14):
    """Left-chirality kernel from the Fourier integral, off the unit circle by eps."""
    a = (1 - eps if side is Side.PLUS else 1 + eps) * np.exp(1j * theta)
    xi = 2 * np.pi * np.arange(n) / n
    coeffs = np.fft.ifft(1.0 / (np.exp(1j * xi) - a))
    return coeffs[np.asarray(xs) % n]


class TestSides:
    def test_parse(self):
        assert Side.parse("+") is Side.PLUS and Side.parse("minus") is Side.MINUS
        assert Side.PLUS.opposite is Side.MINUS

    def test_spectral_point_canonical(self):
        p = SpectralPoint(2 * math.pi + 0.5, "-i0")
        assert p.theta == pytest.approx(0.5) and p.side is Side.MINUS


class TestKernel:
    @pytest.mark.parametrize("theta", [0.0, 0.4, 2.9, 5.5])
    def test_point_values(self, theta):
        assert green0((1, 0), theta, Side.PLUS)[0] == 1
        assert green0((0, 0), theta, Side.PLUS)[0] == 0
        assert green0((0, 0), theta, Side.MINUS)[0] == pytest.approx(-np.exp(-1j * theta), abs=1e-15)

    def test_unimodular_or_zero(self):
        X1, X2 = Window(9).coords()
        for s in Side:
            mod = np.abs(GreenKernel(1.7, s)(X1, X2))
            assert np.all((mod == 0) | (np.abs(mod - 1) <= 1e-15))

    def test_supports_are_lines(self):
        X1, X2 = Window(6).coords()
        for s in Side:
            k = GreenKernel(0.3, s)(X1, X2)
            assert not np.any(k[..., 0:2][X2 != 0])
            assert not np.any(k[..., 2:4][X1 != 0])   # the Up entry lives on the column x1 = 0

    def test_reflection_symmetry(self):
        X1, X2 = Window(7).coords()
        for s in Side:
            k = GreenKernel(2.2, s)
            a, b = k(X1, X2), k(-X1, -X2)
            assert np.array_equal(a[..., 1], b[..., 0])
            assert np.array_equal(a[..., 3], b[..., 2])

    def test_side_difference_is_plane_wave(self):
        x = np.arange(-8, 9)
        th = 1.1
        d = GreenKernel(th, Side.PLUS)(x, 0 * x)[:, 0] - GreenKernel(th, Side.MINUS)(x, 0 * x)[:, 0]
        assert np.allclose(d, np.exp(1j * th * (x - 1)), atol=1e-15, rtol=0)

    @pytest.mark.parametrize("theta", [0.3, 1.9, 4.0])
    @pytest.mark.parametrize("side", list(Side))
    def test_fourier_integral_oracle(self, theta, side):
        xs = np.arange(-20, 21)
        eps = 0.01
        ref = fft_kernel_left(theta, side, xs, eps)
        got = GreenKernel(theta, side)(xs, 0 * xs)[:, 0]
        assert np.all(np.abs(ref - got) <= eps * np.abs(xs - 1) + 1e-10)
        # the right-mover kernel is the mirror image
        got_r = GreenKernel(theta, side)(-xs, 0 * xs)[:, 1]
        assert np.all(np.abs(ref - got_r) <= eps * np.abs(xs - 1) + 1e-10)

    @pytest.mark.parametrize("side", list(Side))
    def test_fundamental_solution_offset_source(self, side):
        from qwscatter.verify import kernel_fundamental_residual

        for p in range(4):
            assert kernel_fundamental_residual(0.8, side, p, 12, y=(3, -2)) <= 1e-12


class TestFreeResolvent:
    def test_delta_reproduces_kernel(self):
        th = 0.6
        u = apply_R0(GridField.delta(3, (0, 0), "L"), th, Side.PLUS)
        X1, X2 = Window(10).coords()
        expect = GreenKernel(th, Side.PLUS)(X1, X2)[..., 0]
        vals = u(X1, X2)
        assert np.allclose(vals[..., 0], expect, atol=1e-15, rtol=0)
        assert not np.any(vals[..., 1:])

    def test_row_support(self):
        f = GridField.zeros(7)
        f.data[:, 5 + 7, 0] = np.arange(15) + 1j
        X1, X2 = Window(12).coords()
        vals = apply_R0(f, 2.0, Side.MINUS)(X1, X2)
        assert not np.any(vals[..., 0][X2 != 5])
        assert not np.any(vals[..., 1:])

    @given(st.integers(0, 2**32 - 1), st.floats(0, 2 * math.pi, exclude_max=True), st.sampled_from(list(Side)))
    @settings(max_examples=30, deadline=None)
    def test_resolvent_residual(self, seed, theta, side):
        from qwscatter.verify import free_resolvent_residual

        f = GridField.random(5, np.random.default_rng(seed), radius=4)
        assert free_resolvent_residual(f, theta, side, 12) <= 1e-12 * max(1.0, f.norm())

    def test_asymptotic_separation(self, rng):
        th = 1.3
        f = GridField.random(10, rng)
        u = apply_R0(f, th, Side.PLUS)
        y = np.arange(-10, 11)
        for x2 in (-4, 0, 7):
            full = np.sum(np.exp(-1j * th * y) * f.data[:, x2 + 10, 0])
            x1 = np.arange(11, 40)
            vals = u(x1, np.full_like(x1, x2))[:, 0]
            assert np.allclose(vals, np.exp(1j * th * (x1 - 1)) * full, atol=1e-12, rtol=0)

    def test_evaluator_deterministic(self, rng):
        u = apply_R0(GridField.random(4, rng), 0.2, Side.PLUS)
        X1, X2 = Window(9).coords()
        assert np.array_equal(u(X1, X2), u(X1, X2))


class TestBoundarySystem:
    def test_identity_coin_empty(self):
        s = assemble_boundary_system(CoinField.identity(2), 0.5)
        assert s.dim == 0

    def test_regression_condition(self, coin1):
        s = assemble_boundary_system(coin1, 0.7, Side.PLUS)
        assert np.isfinite(s.condition)
        assert s.condition == pytest.approx(CONDITION_EXAMPLE1, rel=1e-9)

    def test_dimension_bound_and_order(self, example_coin):
        s = boundary_system(example_coin, 1.0)
        assert 0 < s.dim <= 4 * (2 * example_coin.n0 + 3) ** 2
        rows = [tuple(r) for r in s.omega]
        assert rows == sorted(rows) and len(set(rows)) == len(rows)

    def test_cache_returns_same_object(self, coin1):
        assert boundary_system(coin1, 0.25, "+") is boundary_system(coin1, 0.25, Side.PLUS)


class TestPerturbedResolvent:
    def test_identity_coin_matches_free(self, rng):
        c = CoinField.identity(1)
        f = GridField.random(4, rng)
        X1, X2 = Window(10).coords()
        for s in Side:
            assert np.array_equal(apply_R(c, f, 0.9, s)(X1, X2), apply_R0(f, 0.9, s)(X1, X2))

    def test_residual(self, example_coin, rng):
        from qwscatter.verify import resolvent_residual

        f = GridField.random(example_coin.n0 + 3, rng)
        for s in Side:
            assert resolvent_residual(example_coin, f, 2.4, s, example_coin.n0 + 10) <= 1e-10

    def test_resolvent_equation_forms(self, coin1, rng):
        from qwscatter.verify import resolvent_equation_defect

        f = GridField.random(4, rng)
        for s in Side:
            assert resolvent_equation_defect(coin1, f, 0.35, s, 9) <= 1e-10

    def test_adjoint_pairing(self, example_coin, rng):
        from qwscatter.verify import adjoint_pairing_defect

        n0 = example_coin.n0
        f = GridField.random(n0 + 3, rng)
        g = GridField.random(n0 + 3, rng)
        assert adjoint_pairing_defect(example_coin, f, g, 4.1, 3 * n0 + 12) <= 1e-12

    def test_boundary_source_support(self, coin1, rng):
        g = boundary_source(coin1, GridField.random(5, rng), 1.0, Side.MINUS)
        assert g.L == coin1.n0 + 1


class TestDenseSolve:
    def test_identity(self, rng):
        b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        r = solve_complex_dense(np.eye(6), b)
        assert np.array_equal(r.x, b) and r.residual == 0

    def test_random_well_conditioned(self, rng):
        a = rng.standard_normal((50, 50)) + 1j * rng.standard_normal((50, 50)) + 10 * np.eye(50)
        b = rng.standard_normal((50, 3)) + 0j
        assert solve_complex_dense(a, b).residual <= 1e-12

    def test_hilbert_warns(self):
        n = 8
        h = 1.0 / (np.arange(n)[:, None] + np.arange(n)[None, :] + 1)
        with pytest.warns(IllConditionedWarning):
            r = solve_complex_dense(h, np.ones(n))
        assert r.condition > 1e8

    def test_singular(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(SingularSystem):
                lu_factor(np.zeros((3, 3)))

    def test_non_square(self):
        with pytest.raises(ValueError):
            lu_factor(np.zeros((2, 3)))
