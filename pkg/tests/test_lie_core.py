from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import brute_bch, float_vectors, rational_vectors, small_floats
from heislorentz.lie_core import (
    DimensionError,
    WarpedPoint,
    ad,
    ad_exp_tW,
    bch_multiply,
    biinvariant_gram,
    biinvariant_inner,
    bracket,
    basis_vector,
    conjugation,
    inverse,
    is_automorphism,
    is_derivation,
    to_warped,
    warped_inverse,
    warped_multiply,
)


def X(n, i=1, exact=False):
    return basis_vector(n, f"X{i}", exact)


def Y(n, i=1, exact=False):
    return basis_vector(n, f"Y{i}", exact)


def Z(n, exact=False):
    return basis_vector(n, "Z", exact)


def block_map(n, block, center=1.0):
    m = np.zeros((2 * n + 1, 2 * n + 1))
    m[0, 0] = center
    for i in range(1, n + 1):
        m[i, i], m[i, n + i] = block[0][0], block[0][1]
        m[n + i, i], m[n + i, n + i] = block[1][0], block[1][1]
    return m


class TestBracket:
    def test_xy_gives_z(self):
        assert np.array_equal(bracket(X(1), Y(1)), Z(1))

    def test_x1_x2_commute(self):
        assert np.array_equal(bracket(X(2, 1), X(2, 2)), np.zeros(5))

    def test_cross_pairs_commute(self):
        assert np.array_equal(bracket(X(2, 1), Y(2, 2)), np.zeros(5))

    @given(st.integers(1, 3).flatmap(float_vectors))
    def test_self_bracket_vanishes(self, v):
        assert np.all(bracket(v, v) == 0)

    @given(st.integers(1, 3).flatmap(lambda n: st.tuples(float_vectors(n), float_vectors(n), float_vectors(n))))
    def test_bilinear_antisymmetric_central(self, uvw):
        u, v, w = uvw
        assert np.allclose(bracket(u, v), -bracket(v, u))
        assert np.allclose(bracket(2 * u + w, v), 2 * bracket(u, v) + bracket(w, v))
        assert np.all(bracket(u, v)[1:] == 0)
        assert np.all(bracket(bracket(u, v), w) == 0)

    def test_rank_mismatch(self):
        with pytest.raises(DimensionError):
            bracket(X(1), X(2))

    def test_even_length_rejected(self):
        with pytest.raises(DimensionError):
            bracket(np.zeros(4), np.zeros(4))

    def test_exact_dtype_kept(self):
        assert bracket(X(1, exact=True), Y(1, exact=True))[0] == Fraction(1)


class TestBCH:
    def test_x_times_y(self):
        # group law u + v - 1/2 [u, v] (right-invariant convention)
        got = bch_multiply(X(1, exact=True), Y(1, exact=True))
        assert list(got) == [Fraction(-1, 2), 1, 1]

    @given(st.integers(1, 3).flatmap(rational_vectors))
    def test_inverse_exact(self, v):
        assert all(c == 0 for c in bch_multiply(v, inverse(v)))
        assert all(c == 0 for c in bch_multiply(inverse(v), v))

    @given(st.integers(1, 3).flatmap(rational_vectors))
    def test_identity_exact(self, v):
        zero = np.array([Fraction(0)] * len(v), dtype=object)
        assert list(bch_multiply(v, zero)) == list(v) == list(bch_multiply(zero, v))

    @given(st.integers(1, 3).flatmap(lambda n: st.tuples(rational_vectors(n), rational_vectors(n))))
    def test_matches_coordinate_expansion(self, uv):
        u, v = uv
        assert list(bch_multiply(u, v)) == list(brute_bch(u, v, -1))

    @given(st.integers(1, 3).flatmap(lambda n: st.tuples(*(rational_vectors(n) for _ in range(3)))))
    def test_associative_exact(self, uvw):
        u, v, w = uvw
        assert list(bch_multiply(bch_multiply(u, v), w)) == list(bch_multiply(u, bch_multiply(v, w)))

    def test_matches_matrix_group(self):
        # matrix commutators of this embedding are minus our bracket, so the
        # matrix product realizes the right-invariant group law
        def mat(v):
            z, x, y = v
            return np.array([[0, y, z], [0, 0, x], [0, 0, 0]], dtype=float)

        rng = np.random.default_rng(0)
        for _ in range(20):
            u, v = rng.normal(size=3), rng.normal(size=3)
            lhs = expm(mat(u)) @ expm(mat(v))
            rhs = expm(mat(bch_multiply(u, v)))
            assert np.allclose(lhs, rhs, atol=1e-12)


class TestAutomorphism:
    def test_rotation_blocks(self):
        t = 0.7
        assert is_automorphism(block_map(2, [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]))

    def test_center_doubling_fails(self):
        m = np.eye(3)
        m[0, 0] = 2.0
        chk = is_automorphism(m)
        assert not chk and chk.reason

    def test_unimodular_block(self):
        assert is_automorphism(block_map(2, [[2, 1], [1, 1]]))

    def test_singular_reported(self):
        chk = is_automorphism(np.zeros((3, 3)))
        assert not chk and "singular" in chk.reason

    def test_brute_force_pairs(self, rng):
        # oracle: compare m[b_i, b_j] and [m b_i, m b_j] pair by pair
        for _ in range(20):
            m = rng.normal(size=(5, 5))
            m[0, 1:] = rng.normal(size=4)
            m[1:, 0] = 0
            basis = np.eye(5)
            res = max(
                np.max(np.abs(m @ bracket(bi, bj) - bracket(m @ bi, m @ bj))) for bi in basis for bj in basis
            )
            assert bool(is_automorphism(m, 1e-9)) == (res <= 1e-9)


class TestDerivation:
    def test_j_blocks(self):
        assert is_derivation(block_map(2, [[0, -1], [1, 0]], center=0.0))

    def test_identity_fails(self):
        assert not is_derivation(np.eye(5))

    @given(st.integers(1, 3).flatmap(float_vectors))
    def test_inner_derivations(self, u):
        assert is_derivation(ad(u))

    def test_leibniz_oracle(self, rng):
        for _ in range(20):
            m = rng.normal(size=(3, 3))
            basis = np.eye(3)
            res = max(
                np.max(np.abs(m @ bracket(a, b) - bracket(m @ a, b) - bracket(a, m @ b))) for a in basis for b in basis
            )
            assert bool(is_derivation(m, 1e-9)) == (res <= 1e-9)

    def test_trace_condition(self):
        # a derivation acting on X1,Y1 by a traceful block must scale Z by the trace
        m = np.zeros((3, 3))
        m[1, 1], m[2, 2], m[0, 0] = 1.0, 2.0, 3.0
        assert is_derivation(m)
        m[0, 0] = 2.0
        assert not is_derivation(m)


class TestWarped:
    def test_quarter_turn(self):
        m = ad_exp_tW(np.pi / 2, [1])
        # basis {Z, X1, Y1, W}
        assert np.allclose(m @ [0, 1, 0, 0], [0, 0, 1, 0])
        assert np.allclose(m @ [0, 0, 1, 0], [0, -1, 0, 0])
        assert np.allclose(m @ [1, 0, 0, 0], [1, 0, 0, 0])
        assert np.allclose(m @ [0, 0, 0, 1], [0, 0, 0, 1])

    def test_zero_is_identity(self):
        assert np.array_equal(ad_exp_tW(0.0, ["1/2", 3]), np.eye(6))

    @given(small_floats, small_floats)
    def test_additive(self, s, t):
        lam = [Fraction(1, 3), 2]
        assert np.allclose(ad_exp_tW(s, lam) @ ad_exp_tW(t, lam), ad_exp_tW(s + t, lam), atol=1e-12)

    @given(small_floats)
    def test_is_exponential_of_rotation_generator(self, t):
        lam = [1, Fraction(1, 2)]
        D = np.zeros((6, 6))
        for i, li in enumerate([1.0, 0.5]):
            j = 2 * i + 1
            D[j + 1, j], D[j, j + 1] = li, -li
        assert np.allclose(expm(t * D), ad_exp_tW(t, lam), atol=1e-12)

    @given(small_floats)
    def test_conjugation_is_automorphism(self, t):
        assert is_automorphism(conjugation(t, [1, 2]))

    def test_warped_identity_pieces(self):
        e = np.zeros(3)
        p = warped_multiply(WarpedPoint(0.4, e), WarpedPoint(1.1, e), [1])
        assert p.t == pytest.approx(1.5) and np.allclose(p.h, 0)
        h1, h2 = np.array([0.1, 0.2, 0.3]), np.array([-0.4, 0.5, 0.6])
        q = warped_multiply(WarpedPoint(0.0, h1), WarpedPoint(0.0, h2), [1])
        assert q.t == 0 and np.allclose(q.h, bch_multiply(h1, h2))

    def test_quarter_turn_product(self):
        # (t1, h1)(t2, h2) = (t1 + t2, C_{t2}(h1) h2), C_s = Ad(e^{sW}) on h
        p = warped_multiply(WarpedPoint(0.0, X(1)), WarpedPoint(np.pi / 2, np.zeros(3)), [1])
        assert p.t == pytest.approx(np.pi / 2)
        assert np.allclose(p.h, Y(1), atol=1e-15)

    def test_associative_and_inverse(self, rng):
        lam = [1, Fraction(2, 3)]
        for _ in range(50):
            a, b, c = (WarpedPoint(rng.uniform(-3, 3), rng.normal(size=5)) for _ in range(3))
            l = warped_multiply(warped_multiply(a, b, lam), c, lam)
            r = warped_multiply(a, warped_multiply(b, c, lam), lam)
            assert l.t == pytest.approx(r.t) and np.allclose(l.h, r.h, atol=1e-12)
            e = warped_multiply(a, warped_inverse(a, lam), lam)
            assert abs(e.t) < 1e-14 and np.allclose(e.h, 0, atol=1e-12)


class TestBiinvariant:
    def test_entries(self):
        e = np.eye(4)  # Z, X1, Y1, W
        assert biinvariant_inner(e[1], e[1]) == 1
        assert biinvariant_inner(e[0], e[3]) == 1
        assert biinvariant_inner(e[0], e[0]) == 0
        assert biinvariant_inner(e[1], e[2]) == 0
        assert biinvariant_inner(e[3], e[3]) == 0

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_signature(self, n):
        ev = np.linalg.eigvalsh(biinvariant_gram(n))
        assert (np.sum(ev < 0), np.sum(ev > 0)) == (1, 2 * n + 1)

    def test_ad_invariant(self, rng):
        lam = [1, Fraction(1, 2)]
        for _ in range(100):
            t = rng.uniform(-10, 10)
            u, v = rng.normal(size=6), rng.normal(size=6)
            m = ad_exp_tW(t, lam)
            assert abs(biinvariant_inner(m @ u, m @ v) - biinvariant_inner(u, v)) < 1e-9

    def test_to_warped_places_coordinates(self):
        h = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        assert np.array_equal(to_warped(h, 7.0), [1, 2, 4, 3, 5, 7])

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            biinvariant_inner(np.zeros(4), np.zeros(6))
