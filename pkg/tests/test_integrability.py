import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anyonqism.errors import GradingMismatch, NonUnimodularQ, SingularDenominator, ZeroEta
from anyonqism.graded import anyonic_permutation, nested_grading, string_transparency_check, tj_grading, xxx_grading
from anyonqism.integrability import (
    check_rll,
    check_ybe,
    regularity_residual,
    tj_lax,
    tj_nested_lax,
    tj_nested_lax_spec,
    tj_r_matrix,
    xxx_lax,
    xxx_r_matrix,
)

from oracles import random_phase, swap, unit

phase = st.floats(-np.pi, np.pi, allow_nan=False).map(lambda t: complex(np.exp(1j * t)))
spectral = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


def rc(rng, s=1.0):
    return complex(rng.normal(scale=s), rng.normal(scale=s))


# --- R-matrices -------------------------------------------------------------------------------


def test_xxx_r_at_zero_is_eta_identity():
    np.testing.assert_allclose(xxx_r_matrix(0.7)(0.0), 0.7 * np.eye(4), atol=0)


def test_xxx_r_entries():
    r = xxx_r_matrix(1.0)(1.0)
    expected = np.array([[2, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 2]])
    np.testing.assert_allclose(r, expected, atol=0)


def test_xxx_r_is_eta_plus_lambda_swap():
    r = xxx_r_matrix(0.4 + 0.2j)
    for lam in (0.3, -1.2 + 0.5j):
        np.testing.assert_allclose(r(lam), (0.4 + 0.2j) * np.eye(4) + lam * swap(2), atol=1e-15)


def test_tj_r_at_zero_is_eta_identity():
    np.testing.assert_allclose(tj_r_matrix(2.0)(0.0), 2.0 * np.eye(9), atol=0)


def test_tj_r_entries():
    r = tj_r_matrix(2.0)(1.0)
    # a = 3 on (11),(22),(33); each swapped pair carries [[c, b], [b, c]] = [[2, 1], [1, 2]]
    for i in range(3):
        assert r[4 * i, 4 * i] == 3
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        x, y = 3 * i + j, 3 * j + i
        assert r[x, x] == r[y, y] == 2
        assert r[x, y] == r[y, x] == 1
    assert np.count_nonzero(r) == 3 + 4 * 3


@pytest.mark.parametrize("factory,n", [(xxx_r_matrix, 2), (tj_r_matrix, 3)])
def test_r_affine(factory, n):
    r = factory(0.9)
    slope = r(1.0) - r(0.0)
    for lam in (2.5, -0.3 + 1j):
        np.testing.assert_allclose(r(lam), r(0.0) + lam * slope, atol=1e-14)


def test_zero_eta_rejected():
    with pytest.raises(ZeroEta):
        xxx_r_matrix(0)
    with pytest.raises(ZeroEta):
        tj_r_matrix(0)


def test_tj_r_transparent_for_random_gradings():
    rng = np.random.default_rng(12)
    rv = tj_r_matrix(1.0)(0.8)
    for _ in range(30):
        g = tj_grading(random_phase(rng), random_phase(rng), random_phase(rng))
        assert string_transparency_check(rv, g).transparent


# --- Lax operators ------------------------------------------------------------------------


def test_xxx_lax_regular_point():
    q = np.exp(1.1j)
    lax = xxx_lax(0.8, q)
    np.testing.assert_allclose(lax(0.0), 0.8 * anyonic_permutation(xxx_grading(q), xxx_grading(q)), atol=1e-15)
    assert regularity_residual(lax) <= 1e-13


def test_xxx_lax_blocks():
    q, eta, lam = np.exp(0.5j), 0.7, 0.3 - 0.2j
    a, ad, n = unit(2, 0, 1), unit(2, 1, 0), unit(2, 1, 1)
    expected = np.block(
        [
            [lam * np.eye(2) + eta * (np.eye(2) - n), eta * ad],
            [eta * a, lam * np.eye(2) + (lam * (q - 1) + q * eta) * n],
        ]
    )
    np.testing.assert_allclose(xxx_lax(eta, q)(lam), expected, atol=1e-15)


def test_xxx_lax_entry_example():
    blocks = xxx_lax(1.0, 1j).blocks(1.0)
    assert blocks[1, 1, 1, 1] == pytest.approx(2j, abs=1e-15)


def test_xxx_lax_ungraded_is_rational_l_operator():
    # q = 1: L(lam) = lam + eta P on aux (x) site
    lax = xxx_lax(0.6, 1.0)
    np.testing.assert_allclose(lax(0.4), 0.4 * np.eye(4) + 0.6 * swap(2), atol=1e-15)


def test_tj_lax_regular_point():
    rng = np.random.default_rng(7)
    q1, q2, q3 = (random_phase(rng) for _ in range(3))
    lax = tj_lax(1.3, q1, q2, q3)
    g = tj_grading(q1, q2, q3)
    np.testing.assert_allclose(lax(0.0), 1.3 * anyonic_permutation(g, g), atol=1e-15)


def test_tj_lax_entry_example():
    blocks = tj_lax(1.0, 1j, 1.0, 1.0).blocks(1.0)
    assert blocks[0, 0, 0, 0] == pytest.approx(2j, abs=1e-15)


def test_tj_lax_ungraded_is_su3():
    lax = tj_lax(0.5, 1, 1, 1)
    np.testing.assert_allclose(lax(0.9), 0.9 * np.eye(9) + 0.5 * swap(3), atol=1e-15)


def test_non_unimodular_q_rejected():
    with pytest.raises(NonUnimodularQ):
        xxx_lax(1.0, 1.1)
    with pytest.raises(NonUnimodularQ):
        tj_lax(1.0, 1, 1, 0.5j)


def test_nested_lax_at_zero():
    q1, q2, q3 = np.exp(1j * np.array([0.2, 1.0, -2.0]))
    got = tj_nested_lax(0.0, 1.0, q1, q2, q3)
    expected = np.block(
        [[q1 * unit(3, 0, 0), q3 * unit(3, 1, 0)], [q3 * unit(3, 0, 1), q2 * unit(3, 1, 1)]]
    )
    np.testing.assert_allclose(got, expected, atol=1e-15)


def test_nested_lax_kills_hole():
    m = tj_nested_lax(0.4 + 0.3j, 1.0, 1j, -1j, np.exp(0.3j)).reshape(2, 3, 2, 3)
    hole = np.array([0, 0, 1])
    for a in range(2):
        for b in range(2):
            np.testing.assert_allclose(m[a, :, b, :] @ hole, 0, atol=0)


def test_nested_lax_ungraded_spin_block():
    # on the one-particle spin subspace: (u + eta P) / (u + eta)
    u, eta = 0.7, 1.1
    m = tj_nested_lax(u, eta, 1, 1, 1).reshape(2, 3, 2, 3)[:, :2, :, :2].reshape(4, 4)
    np.testing.assert_allclose(m, (u * np.eye(4) + eta * swap(2)) / (u + eta), atol=1e-15)


def test_nested_lax_singular():
    with pytest.raises(SingularDenominator):
        tj_nested_lax(-1.0, 1.0, 1, 1, 1)


# --- Yang-Baxter and RLL -------------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(spectral, spectral, phase)
def test_xxx_ybe(lam, mu, q):
    rep = check_ybe(xxx_r_matrix(1.0, q), lam, mu)
    assert rep.applicable and rep.residual <= 1e-12 * max(1.0, abs(lam) + abs(mu)) ** 3
    assert rep.details["braid_operator_form"] <= 1e-11 * max(1.0, abs(lam) + abs(mu)) ** 3


@settings(max_examples=30, deadline=None)
@given(spectral, spectral, phase, phase, phase)
def test_su3_ybe(lam, mu, q1, q2, q3):
    rep = check_ybe(tj_r_matrix(1.0, q1, q2, q3), lam, mu)
    assert rep.applicable and rep.residual <= 1e-12 * max(1.0, abs(lam) + abs(mu)) ** 3


def test_ybe_equal_spectral_parameters():
    rep = check_ybe(xxx_r_matrix(1.0, 1j), 0.4, 0.4)
    assert rep.residual == 0.0


def test_rll_xxx_random():
    rng = np.random.default_rng(21)
    for _ in range(20):
        q = random_phase(rng)
        rep = check_rll(xxx_r_matrix(1.0, q), xxx_lax(1.0, q), xxx_grading(q), rc(rng), rc(rng))
        assert rep.passed, rep


def test_rll_tj_random():
    rng = np.random.default_rng(22)
    for _ in range(20):
        qs = [random_phase(rng) for _ in range(3)]
        rep = check_rll(tj_r_matrix(1.0, *qs), tj_lax(1.0, *qs), tj_grading(*qs), rc(rng), rc(rng))
        assert rep.passed, rep


def test_rll_ungraded_reduces():
    rep = check_rll(xxx_r_matrix(0.5), xxx_lax(0.5, 1.0), xxx_grading(1.0), 0.3, -0.9)
    assert rep.residual <= 1e-14


def test_rll_nested():
    rng = np.random.default_rng(23)
    for _ in range(20):
        qs = [random_phase(rng) for _ in range(3)]
        lam, mu = rc(rng), rc(rng)
        if min(abs(lam + 1), abs(mu + 1)) < 1e-3:
            continue
        rep = check_rll(xxx_r_matrix(1.0), tj_nested_lax_spec(1.0, *qs), nested_grading(*qs), lam, mu)
        assert rep.residual <= 1e-10


def test_rll_grading_mismatch():
    with pytest.raises(GradingMismatch):
        check_rll(tj_r_matrix(1.0), xxx_lax(1.0, 1j), xxx_grading(1j))


def test_residuals_scale_homogeneously():
    # R and L are homogeneous of degree 1 in (lam, mu, eta): the residual scales by s^3
    q = np.exp(0.8j)
    lam, mu, s = 0.3 + 0.4j, -0.6, 2.5
    base = check_rll(xxx_r_matrix(1.0, q), xxx_lax(1.0, q), xxx_grading(q), lam, mu).residual
    scaled = check_rll(xxx_r_matrix(s, q), xxx_lax(s, q), xxx_grading(q), s * lam, s * mu).residual
    assert scaled <= s**3 * max(base, 1e-15) * 10 + 1e-13
