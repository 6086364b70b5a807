import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwscatter.lattice import (
    INCLUSION_CONSTANTS, Chirality, CoinField, FieldEvaluator, GridField, Window, apply_coin,
    apply_free_walk, apply_shift, apply_shift_inverse, apply_V, apply_V_adjoint, apply_walk,
    apply_walk_adjoint, evolve, norms, radiation_residual, v_adjoint_range_box, v_range_box,
    validate_coin, validity_radius,
)


def interior_field(seed, L=7, radius=4):
    return GridField.random(L, np.random.default_rng(seed), radius=radius)


class TestChirality:
    def test_order_and_axes(self):
        assert [c.letter for c in Chirality] == ["L", "R", "D", "U"]
        assert [c.axis for c in Chirality] == [0, 0, 1, 1]
        assert [c.sign for c in Chirality] == [1, -1, 1, -1]

    @pytest.mark.parametrize("raw,want", [("L", 0), ("r", 1), ("↓", 2), ("up", 3), (3, 3)])
    def test_parse(self, raw, want):
        assert Chirality.parse(raw) == want

    def test_parse_rejects(self):
        with pytest.raises(ValueError):
            Chirality.parse("Q")


class TestShift:
    def test_left_delta_moves_left(self):
        g = apply_shift(GridField.delta(3, (0, 0), "L"))
        assert g.at(-1, 0)[0] == 1 and g.norm() == 1

    def test_up_delta_moves_up(self):
        g = apply_shift(GridField.delta(3, (0, 0), "U"))
        assert g.at(0, 1)[3] == 1 and g.norm() == 1

    def test_inverse_left(self):
        g = apply_shift_inverse(GridField.delta(3, (0, 0), "L"))
        assert g.at(1, 0)[0] == 1

    def test_edge_reads_zero(self):
        g = apply_shift(GridField.delta(3, (-3, 0), "L"))
        assert g.norm() == 0

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_inverse_pair_and_norm(self, seed):
        f = interior_field(seed, L=6, radius=5)
        assert np.array_equal(apply_shift_inverse(apply_shift(f)).data, f.data)
        assert np.array_equal(apply_shift(apply_shift_inverse(f)).data, f.data)
        assert apply_shift(f).norm() == pytest.approx(f.norm(), rel=1e-14)
        assert apply_shift_inverse(f).norm() == pytest.approx(f.norm(), rel=1e-14)


class TestCoin:
    def test_identity_coin_is_noop(self, rng):
        f = GridField.random(4, rng)
        assert np.array_equal(apply_coin(CoinField.identity(2), f).data, f.data)

    def test_outside_box_untouched(self):
        f = GridField.delta(5, (4, -3), "D")
        assert np.array_equal(apply_coin(CoinField.builtin("example1", 2), f).data, f.data)

    def test_norm_preserved(self, example_coin, rng):
        f = GridField.random(example_coin.n0 + 3, rng)
        assert apply_coin(example_coin, f).norm() == pytest.approx(f.norm(), rel=1e-13)

    def test_window_smaller_than_box_rejected(self):
        with pytest.raises(ValueError):
            apply_coin(CoinField.builtin("example1", 3), GridField.zeros(2))

    def test_coins_are_read_only(self):
        c = CoinField.builtin("example1", 1)
        with pytest.raises(ValueError):
            c.coins[0, 0, 0, 0] = 2


class TestWalk:
    def test_identity_coin_equals_free_walk(self, rng):
        f = GridField.random(5, rng)
        assert np.array_equal(apply_walk(CoinField.identity(2), f).data, apply_free_walk(f).data)

    def test_adjoint_inverts(self, example_coin, rng):
        f = GridField.random(example_coin.n0 + 5, rng, radius=example_coin.n0 + 4)
        back = apply_walk_adjoint(example_coin, apply_walk(example_coin, f))
        assert np.abs(back.data - f.data).max() <= 1e-14

    def test_unitarity(self, example_coin, rng):
        f = GridField.random(example_coin.n0 + 5, rng, radius=example_coin.n0 + 4)
        assert abs(apply_walk(example_coin, f).norm() - f.norm()) <= 1e-12 * f.norm()

    def test_adjoint_consistency(self, example_coin, rng):
        L = example_coin.n0 + 5
        f = GridField.random(L, rng, radius=L - 1)
        g = GridField.random(L, rng, radius=L - 1)
        lhs = apply_walk(example_coin, f).inner(g)
        rhs = f.inner(apply_walk_adjoint(example_coin, g))
        assert abs(lhs - rhs) <= 1e-12 * f.norm() * g.norm()


class TestV:
    def test_identity_coin_gives_zero(self, rng):
        f = GridField.random(4, rng)
        assert apply_V(CoinField.identity(1), f).norm() == 0

    def test_support_outside_box_gives_zero(self):
        c = CoinField.builtin("example1", 1)
        f = GridField.delta(6, (4, 4), "L") + GridField.delta(6, (-3, 0), "U")
        assert apply_V(c, f).norm() == 0

    def test_adjointness(self, example_coin, rng):
        L = example_coin.n0 + 3
        f, g = GridField.random(L, rng), GridField.random(L, rng)
        lhs = apply_V(example_coin, f).inner(g)
        rhs = f.inner(apply_V_adjoint(example_coin, g))
        assert abs(lhs - rhs) <= 1e-12 * f.norm() * g.norm()

    def test_range_boxes_exhaustive(self):
        c = CoinField.random(1, seed=3)
        L = 4
        (a1, b1), (a2, b2) = v_range_box(c)
        (c1, d1), (c2, d2) = v_adjoint_range_box(c)
        X1, X2 = Window(L).coords()
        in_v = (X1 >= a1) & (X1 <= b1) & (X2 >= a2) & (X2 <= b2)
        in_vs = (X1 >= c1) & (X1 <= d1) & (X2 >= c2) & (X2 <= d2)
        for x in Window(L).sites():
            for p in range(4):
                e = GridField.delta(L, x, p)
                assert not np.any(apply_V(c, e).data[~in_v])
                assert not np.any(apply_V_adjoint(c, e).data[~in_vs])


class TestValidation:
    def test_example_coin_passes(self):
        assert validate_coin(CoinField.builtin("example1", 2)).passed

    @pytest.mark.parametrize("name", ["grover", "fourier"])
    def test_minor_failure(self, name):
        rep = validate_coin(CoinField.builtin(name, 1))
        assert not rep.passed
        assert {f["condition"] for f in rep.failures} <= {"odd_minor", "even_minor"}
        assert rep.failures

    def test_non_unitary(self):
        rep = validate_coin(CoinField.homogeneous(np.ones((4, 4)), 1))
        assert not rep.passed
        assert any(f["condition"] == "unitarity" for f in rep.failures)
        assert rep.failures[0]["site"] == [-1, -1]

    def test_floor_is_configurable(self):
        c = CoinField.builtin("example1", 1)
        assert not validate_coin(c, det_floor=0.9).passed

    def test_random_haar_coins_are_unitary(self):
        rep = validate_coin(CoinField.random(2, seed=11))
        assert rep.unitarity_defect.max() <= 1e-12


class TestNorms:
    def test_delta(self):
        r = norms(GridField.delta(8, (0, 0), "L"))
        assert r.shells[0] == 1 and not np.any(r.shells[1:])
        assert r.b_norm == 1 and r.b_star_norm == 1 and r.l2 == 1

    def test_three_shells_hand_value(self):
        f = GridField.zeros(8)
        for x1 in (0, 1, 3):  # one site in each of I_0, I_1, I_2
            f.data[x1 + 8, 8, 0] = 1.0
        assert norms(f).b_norm == pytest.approx(1 + math.sqrt(2) + 2, abs=1e-15)

    def test_anisotropic_binning(self):
        # a Down component far out along x1 still sits in shell 0
        f = GridField.delta(8, (7, 0), "D")
        assert norms(f).shells[0] == 1

    def test_shells_match_brute_force(self, rng):
        f = GridField.random(13, rng)
        rep = norms(f)
        brute = np.zeros(rep.shells.size)
        for i, x1 in enumerate(range(-13, 14)):
            for j, x2 in enumerate(range(-13, 14)):
                for p in range(4):
                    r = abs(x1) if p < 2 else abs(x2)
                    k = 0 if r == 0 else int(r).bit_length()
                    brute[k] += np.abs(f.data[i, j, p]) ** 2
        assert np.array_equal(rep.shells, np.sqrt(brute))

    def test_shells_beyond_window_zero(self):
        rep = norms(GridField.delta(5, (5, 5), "L"))
        assert rep.shells.size == 4 and rep.shells[3] == 1

    def test_inclusion_chain(self, rng):
        ratios = {k: 0.0 for k in INCLUSION_CONSTANTS}
        for _ in range(100):
            L = int(rng.integers(2, 20))
            f = GridField.random(L, rng, radius=int(rng.integers(0, L + 1)))
            f.data *= rng.random(f.data.shape) ** 4
            r = norms(f)
            vals = {"l2s(0.5)": r.l2s[0.5], "l2s(-0.5)": r.l2s[-0.5], "b_norm": r.b_norm,
                    "b_star_norm": r.b_star_norm}
            for (lo, hi), const in INCLUSION_CONSTANTS.items():
                ratios[(lo, hi)] = max(ratios[(lo, hi)], vals[lo] / vals[hi])
        for key, const in INCLUSION_CONSTANTS.items():
            assert ratios[key] <= const * (1 + 1e-12), key


class TestRadiation:
    def test_zero_field(self):
        rep = radiation_residual(GridField.zeros(6), 0.3, "-", 3)
        assert rep.sup == 0 and not np.any(rep.indicator)

    def test_probe_radius_checked(self):
        with pytest.raises(ValueError):
            radiation_residual(GridField.zeros(4), 0.3, "+", 4)

    def test_left_plane_wave_is_outgoing_on_left_only(self):
        th = 0.9
        u = FieldEvaluator(lambda x1, x2: np.stack([np.exp(1j * th * x1) * (x2 == 0)] + [0 * x1] * 3, -1))
        rep = radiation_residual(u, th, "-", 2, window=10)
        res = rep.residual
        assert np.abs(res.data[:10, :, 0]).max() <= 1e-14   # x1 <= 0 side
        assert np.abs(res.data[12:, :, 0]).max() == pytest.approx(1.0)


class TestEvolve:
    def test_zero_steps(self, rng, coin1):
        f = GridField.random(4, rng)
        assert np.array_equal(evolve(coin1, f, 0).data, f.data)

    def test_free_ballistic(self):
        g = evolve(CoinField.identity(1), GridField.delta(6, (0, 0), "L"), 3)
        assert g.at(-3, 0)[0] == 1 and g.norm() == 1

    def test_norm_conserved_inside_validity_radius(self, example_coin, rng):
        L = example_coin.n0 + 12
        f = GridField.random(L, rng, radius=example_coin.n0 + 1)
        t = validity_radius(L, f.support_radius(), 0)
        g = evolve(example_coin, f, t)
        assert abs(g.norm() - f.norm()) <= 1e-12 * f.norm()

    def test_validity_radius_formula(self):
        assert validity_radius(20, 3, 5) == 12
