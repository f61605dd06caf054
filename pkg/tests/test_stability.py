import numpy as np
import pytest

from polytrack import DimensionMismatch, RankDeficient, hurwitz_margin, is_hurwitz, left_inverse
from polytrack.stability import characteristic_polynomial

from oracles import poly_roots_stable


def test_negative_identity():
    assert is_hurwitz(-np.eye(2), 0.5) is True


def test_pure_rotation_not_hurwitz():
    assert is_hurwitz(np.array([[0.0, 1.0], [-1.0, 0.0]]), 1e-9) is False


def test_margin_boundary():
    m = np.diag([-1.0, -2.0])
    assert is_hurwitz(m, 0.9)
    assert not is_hurwitz(m, 1.1)


def test_characteristic_polynomial_matches_numpy():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = rng.integers(1, 7)
        m = rng.normal(size=(n, n))
        ours = characteristic_polynomial(m)
        ref = np.poly(m)
        assert np.allclose(ours, ref, rtol=1e-8, atol=1e-8)


def test_agrees_with_root_finding_on_random_polynomials():
    # random degree <= 4 monic polynomials via their companion matrices
    rng = np.random.default_rng(17)
    for _ in range(300):
        n = int(rng.integers(1, 5))
        roots = rng.uniform(-3, 1.5, size=n) + 1j * rng.uniform(-2, 2, size=n) * rng.integers(0, 2, size=n)
        # make complex roots appear in conjugate pairs
        poly = np.array([1.0])
        i = 0
        while i < n:
            r = roots[i]
            if abs(r.imag) > 1e-12 and i + 1 < n:
                poly = np.convolve(poly, [1.0, -2 * r.real, abs(r) ** 2])
                i += 2
            else:
                poly = np.convolve(poly, [1.0, -r.real])
                i += 1
        coeffs = poly.real
        deg = coeffs.size - 1
        if deg == 0:
            continue
        companion = np.zeros((deg, deg))
        companion[0, :] = -coeffs[1:] / coeffs[0]
        companion[1:, :-1] = np.eye(deg - 1)
        margin = float(rng.uniform(0.0, 0.5))
        expected = poly_roots_stable(coeffs, margin)
        # skip cases too close to the stability boundary to decide in floats
        closest = np.max(np.roots(coeffs).real)
        if abs(closest + margin) < 1e-7:
            continue
        assert is_hurwitz(companion, margin) == expected


def test_shift_consistency():
    rng = np.random.default_rng(23)
    for _ in range(50):
        m = rng.normal(size=(3, 3)) - 2.0 * np.eye(3)
        margin = float(rng.uniform(0.0, 1.0))
        eps = 1e-6
        if is_hurwitz(m, margin):
            assert is_hurwitz(m + (margin - eps) * np.eye(3), eps / 2)


def test_two_tank_phi2_closed_loop_is_hurwitz():
    # closed loop of the two-tank plant under the second design row; the
    # expected verdict is pinned by a Routh table computed from the
    # characteristic polynomial in the oracle script
    a = np.array([[-0.0304, 0.0187], [0.0, -0.0187]])
    b = np.array([[6.6667], [10.0]])
    c = np.array([[1.0, 0.0]])
    k, ki1, ki2 = -3.8881, 0.3733, 0.0085
    acl = np.zeros((4, 4))
    acl[:2, :2] = a + b @ np.array([[k]]) @ c
    acl[:2, 2] = (b * ki1).ravel()
    acl[:2, 3] = (b * ki2).ravel()
    acl[2, :2] = -c.ravel()
    acl[3, 2] = 1.0
    assert is_hurwitz(acl, 1e-4)
    assert poly_roots_stable(characteristic_polynomial(acl), 1e-4)


def test_hurwitz_margin_bisection():
    m = np.diag([-0.5, -3.0])
    assert hurwitz_margin(m) == pytest.approx(0.5, abs=1e-9)
    assert hurwitz_margin(np.array([[1.0]])) == 0.0


def test_dimension_errors():
    with pytest.raises(DimensionMismatch):
        is_hurwitz(np.zeros((2, 3)))
    with pytest.raises(DimensionMismatch):
        is_hurwitz(np.zeros((13, 13)))


def test_left_inverse_identity():
    v = left_inverse(np.eye(3))
    assert np.allclose(v, np.eye(3), atol=1e-12)


def test_left_inverse_column_mean():
    v = left_inverse(np.array([[1.0], [1.0]]))
    assert v == pytest.approx(np.array([[0.5, 0.5]]))


def test_left_inverse_random_tall():
    rng = np.random.default_rng(2)
    m = rng.normal(size=(9, 4))
    v = left_inverse(m)
    assert np.allclose(v @ m, np.eye(4), atol=1e-10)


def test_left_inverse_rank_deficient():
    m = np.ones((4, 2))  # second column equals the first
    with pytest.raises(RankDeficient):
        left_inverse(m)
