"""Anyonic (U(1)) grading: tables, permutations, graded tensor products and chain embeddings.

Conventions used throughout the package:

* basis indices are 0-based internally; the user-facing constructors
  (:func:`make_grading_table`, JSON) use 1-based indices;
* product bases are lexicographic, the leftmost factor being the slowest index;
* a chain with an auxiliary space is laid out as ``aux, site N, ..., site 1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    GradingMismatch,
    NoAuxiliaryFactor,
    NonUnimodularEntry,
    SiteOutOfRange,
    SymmetryConflict,
)

UNIMODULAR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GradingTable:
    """Symmetric table of unimodular grading phases ``w(i, j)``."""

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=complex)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise DimensionMismatch(f"grading table must be square, got shape {w.shape}")
        dev = np.abs(np.abs(w) - 1.0)
        if dev.max() > UNIMODULAR_TOL:
            i, j = np.unravel_index(dev.argmax(), dev.shape)
            raise NonUnimodularEntry(f"|w({i + 1},{j + 1})| = {abs(w[i, j])!r} is not 1")
        if np.abs(w - w.T).max() > UNIMODULAR_TOL:
            raise SymmetryConflict("grading table is not symmetric")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    @property
    def winv(self) -> np.ndarray:
        return 1.0 / self.w

    def is_trivial(self, tol: float = 0.0) -> bool:
        return bool(np.abs(self.w - 1.0).max() <= tol)

    def __eq__(self, other):
        if not isinstance(other, GradingTable):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.w, other.w))

    def __hash__(self):
        return hash((self.dim, self.w.tobytes()))

    def to_json(self) -> dict:
        entries = [
            [i + 1, j + 1, float(self.w[i, j].real), float(self.w[i, j].imag)]
            for i in range(self.dim)
            for j in range(i, self.dim)
        ]
        return {"dim": self.dim, "entries": entries}

    @classmethod
    def from_json(cls, obj: dict) -> "GradingTable":
        entries = [(int(i), int(j), complex(re, im)) for i, j, re, im in obj["entries"]]
        return make_grading_table(int(obj["dim"]), entries)


def make_grading_table(dim: int, entries: Sequence[tuple[int, int, complex]] = ()) -> GradingTable:
    """Build a grading table from 1-based ``(i, j, phase)`` entries.

    Unspecified entries are 1 and every given entry is mirrored to ``(j, i)``.
    Giving both orders with different phases raises :class:`SymmetryConflict`.
    """
    if dim < 1:
        raise DimensionMismatch("dim must be positive")
    w = np.ones((dim, dim), dtype=complex)
    given: dict[tuple[int, int], complex] = {}
    for i, j, phase in entries:
        if not (1 <= i <= dim and 1 <= j <= dim):
            raise DimensionMismatch(f"index ({i},{j}) outside 1..{dim}")
        phase = complex(phase)
        if abs(abs(phase) - 1.0) > UNIMODULAR_TOL:
            raise NonUnimodularEntry(f"|w({i},{j})| = {abs(phase)!r} is not 1")
        for key in ((i, j), (j, i)):
            if key in given and abs(given[key] - phase) > UNIMODULAR_TOL:
                raise SymmetryConflict(f"w{key} given as both {given[key]} and {phase}")
        given[(i, j)] = given[(j, i)] = phase
        w[i - 1, j - 1] = w[j - 1, i - 1] = phase
    return GradingTable(w)


def trivial_grading(dim: int) -> GradingTable:
    return make_grading_table(dim)


def xxx_grading(q: complex) -> GradingTable:
    """Hard-core anyon grading: ``w(2,2) = q``, all other entries 1."""
    return make_grading_table(2, [(2, 2, q)])


def tj_grading(q1: complex, q2: complex, q3: complex) -> GradingTable:
    """t-J grading on the (down, up, hole) basis."""
    return make_grading_table(3, [(1, 1, q1), (2, 2, q2), (1, 2, q3)])


def nested_grading(q1: complex, q2: complex, q3: complex) -> GradingTable:
    """Grading of the two-dimensional spin space used by the nested Lax operator."""
    return make_grading_table(2, [(1, 1, q1), (2, 2, q2), (1, 2, q3)])


def pairing(g_u: GradingTable, g_v: GradingTable) -> np.ndarray:
    """Cross-space phase table ``w(i, j)`` with ``i`` indexing U and ``j`` indexing V.

    Both spaces must carry the same table, or one must be the leading block of the
    other (as for the spin subspace inside the t-J site space).
    """
    big, small = (g_u, g_v) if g_u.dim >= g_v.dim else (g_v, g_u)
    if not np.allclose(big.w[: small.dim, : small.dim], small.w, rtol=0, atol=UNIMODULAR_TOL):
        raise GradingMismatch("grading tables are not compatible")
    return big.w[: g_u.dim, : g_v.dim]


def anyonic_permutation(g_u: GradingTable, g_v: GradingTable, variant: str = "P") -> np.ndarray:
    """Matrix of the anyonic permutation.

    ``P`` maps ``u^i (x) v^j -> w(i,j) v^j (x) u^i`` (from U(x)V to V(x)U),
    ``P_inverse`` is its inverse (from V(x)U to U(x)V) and ``P_dual`` uses ``1/w``.
    """
    w = pairing(g_u, g_v)
    nu, nv = g_u.dim, g_v.dim
    out = np.zeros((nu * nv, nu * nv), dtype=complex)
    for i in range(nu):
        for j in range(nv):
            if variant == "P":
                out[j * nu + i, i * nv + j] = w[i, j]
            elif variant == "P_dual":
                out[j * nu + i, i * nv + j] = 1.0 / w[i, j]
            elif variant == "P_inverse":
                out[i * nv + j, j * nu + i] = 1.0 / w[i, j]
            else:
                raise ValueError(f"unknown permutation variant {variant!r}")
    return out


@dataclass(frozen=True)
class _Group:
    # a graded operator on a product of elementary spaces
    matrix: np.ndarray
    tables: tuple[GradingTable, ...]

    @property
    def dims(self):
        return tuple(t.dim for t in self.tables)


def _digits(dims: Sequence[int]) -> list[np.ndarray]:
    grid = np.indices(dims).reshape(len(dims), -1)
    return list(grid)


def _combine(left: _Group, right: _Group) -> _Group:
    dl, dr = left.matrix.shape[0], right.matrix.shape[0]
    dig_l, dig_r = _digits(left.dims), _digits(right.dims)
    # g[J, K] = prod_{a in left, b in right} w(J_a, K_b)
    g = np.ones((dl, dr), dtype=complex)
    for ta, ja in zip(left.tables, dig_l):
        for tb, kb in zip(right.tables, dig_r):
            g *= pairing(ta, tb)[ja[:, None], kb[None, :]]
    # e^I_J (x)_a f^K_L = g[J, K] / g[J, L] * (e^I_J (x) f^K_L)
    out = np.einsum("ik,jl,kj,kl->ijkl", left.matrix, right.matrix, g, 1.0 / g)
    return _Group(out.reshape(dl * dr, dl * dr), left.tables + right.tables)


def graded_tensor(operands: Sequence[tuple[np.ndarray, GradingTable]], fold: str = "left") -> np.ndarray:
    """Anyonic graded tensor product of square matrices.

    Each operand is ``(matrix, table)``; ``table`` may be a tuple of tables for an
    operand that itself lives on a product of spaces. The binary product scales the ordinary
    coefficient of ``e^i_j (x) f^k_l`` by ``w(j,k) / w(j,l)``; the n-ary product is
    the left fold of binary products (``fold="right"`` is available to exhibit
    associativity).
    """
    if not operands:
        raise DimensionMismatch("graded_tensor needs at least one operand")
    groups = []
    for mat, tables in operands:
        tables = (tables,) if isinstance(tables, GradingTable) else tuple(tables)
        dim = int(np.prod([t.dim for t in tables]))
        mat = np.asarray(mat, dtype=complex)
        if mat.ndim != 2 or mat.shape != (dim, dim):
            raise DimensionMismatch(f"operand of shape {mat.shape} does not match grading dimension {dim}")
        groups.append(_Group(mat, tables))
    if fold == "left":
        acc = groups[0]
        for g in groups[1:]:
            acc = _combine(acc, g)
    elif fold == "right":
        acc = groups[-1]
        for g in reversed(groups[:-1]):
            acc = _combine(g, acc)
    else:
        raise ValueError(f"fold must be 'left' or 'right', got {fold!r}")
    return acc.matrix


class TransparencyResult(NamedTuple):
    transparent: bool
    worst_violation: float


def string_transparency_check(a: np.ndarray, g: GradingTable, tol: float = 1e-12) -> TransparencyResult:
    """Test whether a two-site operator picks up no string phases when embedded.

    The condition is ``w(m,i) w(m,k) = w(m,j) w(m,l)`` for every index ``m`` and
    every nonzero entry ``A[(i,k),(j,l)]``.
    """
    n = g.dim
    a = np.asarray(a)
    if a.shape != (n * n, n * n):
        raise DimensionMismatch(f"expected a {n * n}x{n * n} matrix, got {a.shape}")
    worst = 0.0
    for r, c in zip(*np.nonzero(np.abs(a) > 0)):
        i, k = divmod(int(r), n)
        j, l = divmod(int(c), n)
        dev = np.abs(g.w[:, i] * g.w[:, k] - g.w[:, j] * g.w[:, l]).max()
        worst = max(worst, float(dev))
    return TransparencyResult(worst <= tol, worst)


@dataclass(frozen=True)
class ChainLayout:
    """Factor layout ``aux, site N, ..., site 1`` of a chain Hilbert space."""

    num_sites: int
    local_dim: int
    aux_dim: int = 0
    factor_order: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.num_sites < 1:
            raise DimensionMismatch("num_sites must be positive")
        if self.local_dim < 1 or self.aux_dim < 0:
            raise DimensionMismatch("invalid local/aux dimension")
        order = (("aux",) if self.aux_dim else ()) + tuple(range(self.num_sites, 0, -1))
        object.__setattr__(self, "factor_order", order)

    @property
    def chain_dim(self) -> int:
        return self.local_dim**self.num_sites

    @property
    def dim(self) -> int:
        return max(self.aux_dim, 1) * self.chain_dim

    def without_aux(self) -> "ChainLayout":
        return ChainLayout(self.num_sites, self.local_dim, 0)

    def with_aux(self, n: int) -> "ChainLayout":
        return ChainLayout(self.num_sites, self.local_dim, n)

    def describe(self) -> dict:
        return {
            "num_sites": self.num_sites,
            "local_dim": self.local_dim,
            "aux_dim": self.aux_dim,
            "factor_order": [str(f) for f in self.factor_order],
            "basis": "lexicographic product basis, local index 1 first, leftmost factor slowest",
        }


@dataclass(frozen=True, eq=False)
class ChainOperator:
    """Dense operator on the Hilbert space described by ``layout``."""

    layout: ChainLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.layout.dim, self.layout.dim):
            raise DimensionMismatch(f"matrix shape {m.shape} does not match layout dimension {self.layout.dim}")
        object.__setattr__(self, "matrix", m)

    def _check(self, other):
        if not isinstance(other, ChainOperator):
            return NotImplemented
        if other.layout != self.layout:
            raise DimensionMismatch("operators live on different layouts")
        return other

    def __matmul__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return ChainOperator(self.layout, self.matrix @ other.matrix)

    def __add__(self, other):
        if np.isscalar(other):
            return ChainOperator(self.layout, self.matrix + other * np.eye(self.layout.dim))
        if self._check(other) is NotImplemented:
            return NotImplemented
        return ChainOperator(self.layout, self.matrix + other.matrix)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1) * other

    def __rsub__(self, other):
        return (-1) * self + other

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return ChainOperator(self.layout, c * self.matrix)

    __rmul__ = __mul__

    def __neg__(self):
        return ChainOperator(self.layout, -self.matrix)

    @property
    def dag(self) -> "ChainOperator":
        return ChainOperator(self.layout, self.matrix.conj().T)

    def identity(self) -> "ChainOperator":
        return ChainOperator(self.layout, np.eye(self.layout.dim, dtype=complex))


def commutator(a: ChainOperator, b: ChainOperator) -> ChainOperator:
    return a @ b - b @ a


def anticommutator(a: ChainOperator, b: ChainOperator) -> ChainOperator:
    return a @ b + b @ a


def string_diagonal(g: GradingTable, i: int, j: int) -> np.ndarray:
    """Diagonal phase ``w(m,i)/w(m,j)`` left behind on a site passed by ``e^i_j``."""
    return g.w[:, i] / g.w[:, j]


def embed_local_matrix(x: np.ndarray, site: int, num_sites: int, g: GradingTable) -> np.ndarray:
    """Chain matrix of the graded embedding of a single-site operator (no aux factor)."""
    x = np.asarray(x, dtype=complex)
    d = g.dim
    if x.shape != (d, d):
        raise DimensionMismatch(f"local operator of shape {x.shape}, expected {(d, d)}")
    if not 1 <= site <= num_sites:
        raise SiteOutOfRange(f"site {site} outside 1..{num_sites}")
    n_left = num_sites - site
    right = np.ones(d ** (site - 1))
    out = np.zeros((d**num_sites, d**num_sites), dtype=complex)
    for i, j in zip(*np.nonzero(x)):
        string = np.ones(1, dtype=complex)
        diag = string_diagonal(g, i, j)
        for _ in range(n_left):
            string = np.kron(string, diag)
        # string (x) e^i_j (x) identity, written as scattered diagonal blocks
        e = np.zeros((d, d), dtype=complex)
        e[i, j] = x[i, j]
        out += np.kron(np.kron(np.diag(string), e), np.diag(right))
    return out


def embed_local(
    x: np.ndarray,
    site: int,
    layout: ChainLayout,
    g: GradingTable,
    aux_operand: np.ndarray | None = None,
    g_aux: GradingTable | None = None,
) -> ChainOperator:
    """Graded embedding of a local operator at ``site`` (1-based).

    Identity factors standing left of the site (sites ``N..site+1``) pick up the
    string phases dictated by the graded tensor product; factors to the right stay
    untouched. With ``aux_operand`` the result acts on ``aux (x) chain`` and the
    auxiliary factor takes part in the graded product like any other factor.
    """
    if layout.local_dim != g.dim:
        raise DimensionMismatch("layout local_dim does not match grading table")
    chain = embed_local_matrix(x, site, layout.num_sites, g)
    if aux_operand is None:
        if layout.aux_dim:
            chain = np.kron(np.eye(layout.aux_dim), chain)
        return ChainOperator(layout, chain)
    aux = np.asarray(aux_operand, dtype=complex)
    n = layout.aux_dim
    if n == 0 or aux.shape != (n, n):
        raise DimensionMismatch("aux_operand requires a layout with a matching auxiliary factor")
    w = pairing(g_aux if g_aux is not None else g, g)
    x = np.asarray(x, dtype=complex)
    out = np.zeros((layout.dim, layout.dim), dtype=complex)
    for i, j in zip(*np.nonzero(x)):
        e = np.zeros_like(x)
        e[i, j] = x[i, j]
        phased_aux = aux * (w[:, i] / w[:, j])[None, :]
        out += np.kron(phased_aux, embed_local_matrix(e, site, layout.num_sites, g))
    return ChainOperator(layout, out)


def embed_two_space(m: np.ndarray, site: int, layout: ChainLayout, g: GradingTable) -> ChainOperator:
    """Embed an operator on ``aux (x)_a quantum`` (given by its ordinary matrix) at ``site``.

    ``m`` is the ordinary matrix of the operator on the graded product, so the
    aux/site pairing phase is already contained in it and only the strings from
    the sites between the auxiliary factor and ``site`` are added.
    """
    n, d = layout.aux_dim, layout.local_dim
    m = np.asarray(m, dtype=complex)
    if n == 0 or m.shape != (n * d, n * d):
        raise DimensionMismatch(f"expected a {n * d}x{n * d} operator on aux (x) quantum")
    out = np.zeros((layout.dim, layout.dim), dtype=complex)
    blocks = m.reshape(n, d, n, d)
    for a, b in itertools.product(range(n), repeat=2):
        blk = blocks[a, :, b, :]
        if not np.any(blk):
            continue
        e = np.zeros((n, n))
        e[a, b] = 1.0
        out += np.kron(e, embed_local_matrix(blk, site, layout.num_sites, g))
    return ChainOperator(layout, out)


def aux_block(t: ChainOperator, a: int, b: int) -> np.ndarray:
    """Chain matrix ``T^a_b`` (0-based aux indices) of an operator on ``aux (x) chain``."""
    n, dc = t.layout.aux_dim, t.layout.chain_dim
    if n == 0:
        raise NoAuxiliaryFactor("operator has no auxiliary factor")
    return t.matrix[a * dc : (a + 1) * dc, b * dc : (b + 1) * dc]


def graded_partial_trace(t_big: ChainOperator, g_aux: GradingTable) -> ChainOperator:
    """``sum_a w(a,a)^-1 T^a_a`` over the auxiliary factor."""
    n = t_big.layout.aux_dim
    if n == 0:
        raise NoAuxiliaryFactor("operator has no auxiliary factor")
    if g_aux.dim != n:
        raise DimensionMismatch("aux grading table does not match the auxiliary dimension")
    out = sum(aux_block(t_big, a, a) / g_aux.w[a, a] for a in range(n))
    return ChainOperator(t_big.layout.without_aux(), out)
