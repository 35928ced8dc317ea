import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anyonqism.errors import (
    DimensionMismatch,
    GradingMismatch,
    NoAuxiliaryFactor,
    NonUnimodularEntry,
    SiteOutOfRange,
    SymmetryConflict,
)
from anyonqism.graded import (
    ChainLayout,
    ChainOperator,
    GradingTable,
    anyonic_permutation,
    aux_block,
    embed_local,
    graded_partial_trace,
    graded_tensor,
    make_grading_table,
    string_transparency_check,
    tj_grading,
    trivial_grading,
    xxx_grading,
)

from oracles import (
    graded_pair_bruteforce,
    permutation_bruteforce,
    product_rule_coefficient,
    random_table,
    unit,
)

angles = st.floats(-np.pi, np.pi, allow_nan=False)


def table(w):
    return GradingTable(np.asarray(w, dtype=complex))


# --- grading tables ---------------------------------------------------------------


def test_xxx_table_from_entries():
    g = make_grading_table(2, [(2, 2, 1j)])
    np.testing.assert_array_equal(g.w, [[1, 1], [1, 1j]])


def test_tj_table_from_entries():
    q1, q2, q3 = np.exp(1j * np.array([0.3, -1.1, 2.0]))
    g = make_grading_table(3, [(1, 1, q1), (2, 2, q2), (1, 2, q3)])
    expected = np.array([[q1, q3, 1], [q3, q2, 1], [1, 1, 1]])
    np.testing.assert_allclose(g.w, expected, atol=0)
    np.testing.assert_allclose(tj_grading(q1, q2, q3).w, expected, atol=0)


def test_empty_entries_is_trivial():
    g = make_grading_table(2, [])
    np.testing.assert_array_equal(g.w, np.ones((2, 2)))
    assert g.is_trivial()


def test_non_unimodular_entry_rejected():
    with pytest.raises(NonUnimodularEntry):
        make_grading_table(2, [(1, 2, 1.001)])


def test_conflicting_mirror_entries_rejected():
    with pytest.raises(SymmetryConflict):
        make_grading_table(2, [(1, 2, 1j), (2, 1, -1j)])


def test_consistent_mirror_entries_accepted():
    g = make_grading_table(2, [(1, 2, 1j), (2, 1, 1j)])
    assert g.w[0, 1] == g.w[1, 0] == 1j


def test_grading_json_roundtrip():
    g = tj_grading(np.exp(0.4j), np.exp(-2j), 1j)
    again = GradingTable.from_json(json.loads(json.dumps(g.to_json())))
    np.testing.assert_allclose(again.w, g.w, atol=1e-15)


# --- anyonic permutation ---------------------------------------------------------------


def test_trivial_permutation_is_swap():
    p = anyonic_permutation(trivial_grading(2), trivial_grading(2))
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    np.testing.assert_array_equal(p, swap)


def test_permutation_phase_on_doubly_excited_state():
    q = np.exp(0.9j)
    p = anyonic_permutation(xxx_grading(q), xxx_grading(q))
    e22 = np.zeros(4)
    e22[3] = 1
    np.testing.assert_allclose(p @ e22, q * e22)


def test_permutation_matches_bruteforce():
    rng = np.random.default_rng(3)
    w = random_table(rng, 3)
    g = table(w)
    np.testing.assert_allclose(anyonic_permutation(g, g), permutation_bruteforce(w), atol=0)


def test_permutation_inverse_for_random_tables():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(1, 4))
        g = table(random_table(rng, n))
        p = anyonic_permutation(g, g)
        pinv = anyonic_permutation(g, g, "P_inverse")
        assert np.abs(pinv @ p - np.eye(n * n)).max() <= 1e-14


def test_permutation_dual_uses_inverse_phases():
    rng = np.random.default_rng(5)
    w = random_table(rng, 2)
    pd = anyonic_permutation(table(w), table(w), "P_dual")
    np.testing.assert_allclose(pd, permutation_bruteforce(1 / w), atol=0)


def test_permutation_incompatible_tables():
    g2 = xxx_grading(1j)
    g3 = tj_grading(1j, 1j, 1j)  # leading 2x2 block differs from g2
    with pytest.raises(GradingMismatch):
        anyonic_permutation(g2, g3)


# --- graded tensor -------------------------------------------------------------------------


def test_basis_product_example():
    q = np.exp(1.3j)
    g = xxx_grading(q)
    e12, e21 = unit(2, 0, 1), unit(2, 1, 0)
    got = graded_tensor([(e12, g), (e21, g)])
    np.testing.assert_allclose(got, q * np.kron(e12, e21), atol=0)


def test_identity_on_right_has_no_phases():
    rng = np.random.default_rng(0)
    g = table(random_table(rng, 3))
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    np.testing.assert_allclose(graded_tensor([(a, g), (np.eye(3), g)]), np.kron(a, np.eye(3)), atol=1e-15)


def test_identity_on_left_gives_string():
    q = np.exp(-0.7j)
    g = xxx_grading(q)
    e21 = unit(2, 1, 0)
    got = graded_tensor([(np.eye(2), g), (e21, g)])
    np.testing.assert_allclose(got, np.kron(np.diag([1, q]), e21), atol=1e-15)


def test_binary_product_matches_bruteforce():
    rng = np.random.default_rng(8)
    for n in (2, 3):
        w = random_table(rng, n)
        g = table(w)
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        np.testing.assert_allclose(graded_tensor([(a, g), (b, g)]), graded_pair_bruteforce(a, b, w), atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_associativity(n, seed):
    rng = np.random.default_rng(seed)
    g = table(random_table(rng, n))
    ops = [(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), g) for _ in range(3)]
    left = graded_tensor(ops, fold="left")
    right = graded_tensor(ops, fold="right")
    assert np.abs(left - right).max() <= 1e-13


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3), st.integers(0, 2**32 - 1))
def test_multiplication_consistency(n, seed):
    rng = np.random.default_rng(seed)
    w = random_table(rng, n)
    g = table(w)
    i, j, k, l, p, q, r, s = rng.integers(0, n, 8)
    x = graded_tensor([(unit(n, i, j), g), (unit(n, k, l), g)])
    y = graded_tensor([(unit(n, p, q), g), (unit(n, r, s), g)])
    prod = x @ y
    if j == p and l == r:
        expected = product_rule_coefficient(w, p, q, k, l) * graded_tensor([(unit(n, i, q), g), (unit(n, k, s), g)])
    else:
        expected = np.zeros_like(prod)
    assert np.abs(prod - expected).max() <= 1e-13


@given(angles)
def test_trivial_grading_reduces_to_kron(theta):
    rng = np.random.default_rng(abs(int(theta * 1e6)))
    a, b = rng.normal(size=(2, 2)), rng.normal(size=(3, 3))
    got = graded_tensor([(a, trivial_grading(2)), (b, trivial_grading(3))])
    np.testing.assert_allclose(got, np.kron(a, b), atol=0)


def test_graded_tensor_rejects_bad_shape():
    with pytest.raises(DimensionMismatch):
        graded_tensor([(np.eye(3), xxx_grading(1j)), (np.eye(2), xxx_grading(1j))])


# --- chain embedding ------------------------------------------------------------------------


def test_embed_leftmost_site_has_no_string():
    q = np.exp(0.6j)
    lay = ChainLayout(2, 2)
    op = embed_local(unit(2, 1, 0), 2, lay, xxx_grading(q))
    np.testing.assert_allclose(op.matrix, np.kron(unit(2, 1, 0), np.eye(2)), atol=0)


def test_embed_rightmost_site_carries_string():
    q = np.exp(0.6j)
    lay = ChainLayout(2, 2)
    op = embed_local(unit(2, 0, 1), 1, lay, xxx_grading(q))
    np.testing.assert_allclose(op.matrix, np.kron(np.diag([1, 1 / q]), unit(2, 0, 1)), atol=1e-15)


def test_embed_equals_nary_graded_tensor():
    rng = np.random.default_rng(4)
    g = table(random_table(rng, 3))
    x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    lay = ChainLayout(3, 3)
    for site in (1, 2, 3):
        factors = [(x if s == site else np.eye(3), g) for s in (3, 2, 1)]
        np.testing.assert_allclose(embed_local(x, site, lay, g).matrix, graded_tensor(factors), atol=1e-13)


def test_embed_trivial_grading_is_padding():
    x = np.arange(4.0).reshape(2, 2)
    lay = ChainLayout(3, 2)
    got = embed_local(x, 2, lay, trivial_grading(2)).matrix
    np.testing.assert_allclose(got, np.kron(np.kron(np.eye(2), x), np.eye(2)), atol=0)


def test_embed_with_aux_operand_matches_graded_tensor():
    rng = np.random.default_rng(6)
    g = table(random_table(rng, 2))
    lay = ChainLayout(2, 2, aux_dim=2)
    x, aux = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    got = embed_local(x, 1, lay, g, aux_operand=aux).matrix
    expected = graded_tensor([(aux, g), (np.eye(2), g), (x, g)])
    np.testing.assert_allclose(got, expected, atol=1e-13)


def test_embed_errors():
    lay = ChainLayout(2, 2)
    with pytest.raises(SiteOutOfRange):
        embed_local(np.eye(2), 3, lay, xxx_grading(1j))
    with pytest.raises(DimensionMismatch):
        embed_local(np.eye(3), 1, lay, xxx_grading(1j))


def test_layout_dimension():
    assert ChainLayout(3, 2).dim == 8
    assert ChainLayout(3, 2, aux_dim=3).dim == 24
    with pytest.raises(DimensionMismatch):
        ChainOperator(ChainLayout(2, 2), np.eye(3))


# --- string transparency ------------------------------------------------------------------


def test_xxx_braid_matrix_transparent():
    rng = np.random.default_rng(1)
    rv = np.eye(4) * 1.0 + 0.7 * np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    for _ in range(20):
        g = xxx_grading(np.exp(1j * rng.uniform(-np.pi, np.pi)))
        assert string_transparency_check(rv, g).transparent


def test_off_diagonal_operator_not_transparent():
    q = np.exp(0.8j)
    a = np.kron(unit(2, 0, 0), unit(2, 0, 1))
    res = string_transparency_check(a, xxx_grading(q))
    assert not res.transparent
    assert res.worst_violation == pytest.approx(abs(1 - q), abs=1e-15)


# --- graded partial trace -------------------------------------------------------------------


def test_partial_trace_trivial_is_ordinary():
    rng = np.random.default_rng(2)
    lay = ChainLayout(1, 2, aux_dim=2)
    m = rng.normal(size=(4, 4))
    tr = graded_partial_trace(ChainOperator(lay, m), trivial_grading(2)).matrix
    np.testing.assert_allclose(tr, m.reshape(2, 2, 2, 2).trace(axis1=0, axis2=2), atol=1e-15)


def test_partial_trace_xxx_weights():
    rng = np.random.default_rng(2)
    q = np.exp(2.2j)
    op = ChainOperator(ChainLayout(2, 2, aux_dim=2), rng.normal(size=(8, 8)))
    tr = graded_partial_trace(op, xxx_grading(q)).matrix
    np.testing.assert_allclose(tr, aux_block(op, 0, 0) + aux_block(op, 1, 1) / q, atol=1e-15)


def test_partial_trace_tj_weights():
    rng = np.random.default_rng(2)
    q1, q2, q3 = np.exp(1j * rng.uniform(-3, 3, 3))
    op = ChainOperator(ChainLayout(1, 3, aux_dim=3), rng.normal(size=(9, 9)))
    tr = graded_partial_trace(op, tj_grading(q1, q2, q3)).matrix
    blk = op.matrix.reshape(3, 3, 3, 3)
    np.testing.assert_allclose(tr, blk[0, :, 0] / q1 + blk[1, :, 1] / q2 + blk[2, :, 2], atol=1e-15)


def test_partial_trace_requires_aux():
    with pytest.raises(NoAuxiliaryFactor):
        graded_partial_trace(ChainOperator(ChainLayout(1, 2), np.eye(2)), xxx_grading(1j))
