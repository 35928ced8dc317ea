"""Hard-core anyon chains: site operators, monodromy/transfer matrices, Hamiltonians, spectra."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConvergenceFailure, NonUnimodularQ, ResourceLimit, SingularShift, ZeroEta
from .graded import (
    ChainLayout,
    ChainOperator,
    GradingTable,
    anticommutator,
    embed_local,
    embed_two_space,
    graded_partial_trace,
    tj_grading,
    xxx_grading,
)
from .integrability import LaxSpec, ResidualReport, RMatrixSpec, tj_lax, tj_r_matrix, xxx_lax, xxx_r_matrix

DEFAULT_DIM_CAP = 20_000
SHIFT_COND_LIMIT = 1e8


def dim_cap() -> int:
    """Dimension cap, overridable through ``ANYONQISM_DIM_CAP``."""
    return int(os.environ.get("ANYONQISM_DIM_CAP", DEFAULT_DIM_CAP))


@dataclass(frozen=True)
class ModelSpec:
    """A hard-core anyon chain: ``kind`` is ``"xxx"`` or ``"tj"``.

    Statistical parameters must be unimodular; the t-J couplings are fixed at the
    integrable point ``J = 2``, ``t = 1``.
    """

    kind: str
    L: int
    eta: complex = 1.0
    q: complex = 1.0
    q1: complex = 1.0
    q2: complex = 1.0
    q3: complex = 1.0
    J: float = 2.0
    t: float = 1.0

    def __post_init__(self):
        if self.kind not in ("xxx", "tj"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if int(self.L) != self.L or self.L < 1:
            raise ValueError("L must be >= 1")
        if self.eta == 0:
            raise ZeroEta("eta must be nonzero")
        for name in ("q", "q1", "q2", "q3"):
            val = complex(getattr(self, name))
            if abs(abs(val) - 1.0) > 1e-12:
                raise NonUnimodularQ(f"{name} = {val} is not unimodular")
            object.__setattr__(self, name, val)
        object.__setattr__(self, "eta", complex(self.eta))
        if self.kind == "tj" and (self.J != 2.0 or self.t != 1.0):
            raise ValueError("the t-J chain is integrable only at J = 2, t = 1")

    @classmethod
    def xxx(cls, L: int, eta: complex = 1.0, theta: float = 0.0) -> "ModelSpec":
        return cls("xxx", L, eta, q=np.exp(1j * theta))

    @classmethod
    def tj(cls, L: int, eta: complex = 1.0, theta1: float = 0.0, theta2: float = 0.0, theta3: float = 0.0) -> "ModelSpec":
        return cls("tj", L, eta, q1=np.exp(1j * theta1), q2=np.exp(1j * theta2), q3=np.exp(1j * theta3))

    @property
    def local_dim(self) -> int:
        return 2 if self.kind == "xxx" else 3

    @property
    def aux_dim(self) -> int:
        return self.local_dim

    @property
    def grading(self) -> GradingTable:
        if self.kind == "xxx":
            return xxx_grading(self.q)
        return tj_grading(self.q1, self.q2, self.q3)

    @property
    def phases(self) -> tuple[complex, ...]:
        return (self.q,) if self.kind == "xxx" else (self.q1, self.q2, self.q3)

    def lax(self) -> LaxSpec:
        if self.kind == "xxx":
            return xxx_lax(self.eta, self.q)
        return tj_lax(self.eta, self.q1, self.q2, self.q3)

    def r_matrix(self) -> RMatrixSpec:
        if self.kind == "xxx":
            return xxx_r_matrix(self.eta, self.q)
        return tj_r_matrix(self.eta, self.q1, self.q2, self.q3)

    def layout(self, aux: bool = False) -> ChainLayout:
        return ChainLayout(self.L, self.local_dim, self.aux_dim if aux else 0)

    def params(self) -> dict:
        out = {"kind": self.kind, "L": self.L, "eta": [self.eta.real, self.eta.imag]}
        names = ("q",) if self.kind == "xxx" else ("q1", "q2", "q3")
        for name in names:
            val = getattr(self, name)
            out[name] = [val.real, val.imag]
        if self.kind == "tj":
            out.update(J=self.J, t=self.t)
        return out


def _check_cap(dim: int):
    cap = dim_cap()
    if dim > cap:
        raise ResourceLimit(f"Hilbert space dimension {dim} exceeds the cap {cap} (ANYONQISM_DIM_CAP)")


def _e(d, i, j):
    m = np.zeros((d, d), dtype=complex)
    m[i - 1, j - 1] = 1.0
    return m


# local operators: XXX basis (|0>, |1>); t-J basis (down, up, hole)
XXX_LOCAL = {"a": _e(2, 1, 2), "ad": _e(2, 2, 1), "n": _e(2, 2, 2)}
TJ_LOCAL = {
    "a_dn": _e(3, 3, 1),
    "a_up": _e(3, 3, 2),
    "ad_dn": _e(3, 1, 3),
    "ad_up": _e(3, 2, 3),
    "n_dn": _e(3, 1, 1),
    "n_up": _e(3, 2, 2),
    "n": _e(3, 1, 1) + _e(3, 2, 2),
    "sp": _e(3, 2, 1),
    "sm": _e(3, 1, 2),
    "sz": 0.5 * (_e(3, 2, 2) - _e(3, 1, 1)),
}


@dataclass(frozen=True, eq=False)
class SiteOperators:
    """Graded site operators; ``ops[name][j]`` is the operator at site ``j`` (1-based)."""

    model: ModelSpec
    ops: dict = field(repr=False)

    def __getitem__(self, key):
        name, j = key
        return self.ops[name][j]

    @property
    def identity(self) -> ChainOperator:
        layout = self.model.layout()
        return ChainOperator(layout, np.eye(layout.dim, dtype=complex))


def build_site_operators(model: ModelSpec) -> SiteOperators:
    layout = model.layout()
    _check_cap(layout.dim)
    g = model.grading
    local = XXX_LOCAL if model.kind == "xxx" else TJ_LOCAL
    ops = {
        name: {j: embed_local(x, j, layout, g) for j in range(1, model.L + 1)}
        for name, x in local.items()
    }
    return SiteOperators(model, ops)


def _maxabs(a: ChainOperator) -> float:
    return float(np.abs(a.matrix).max()) if a.matrix.size else 0.0


def _relations(model: ModelSpec, so: SiteOperators):
    """Yield ``(label, lhs, rhs)`` for every listed exchange relation."""
    one = so.identity
    zero = 0 * one
    L = model.L
    if model.kind == "xxx":
        q = model.q
        a, ad = so.ops["a"], so.ops["ad"]
        for j in range(1, L + 1):
            yield f"{{a{j},a{j}}}=0", anticommutator(a[j], a[j]), zero
            yield f"{{a+{j},a+{j}}}=0", anticommutator(ad[j], ad[j]), zero
            yield f"{{a{j},a+{j}}}=1", anticommutator(a[j], ad[j]), one
        for i in range(1, L + 1):
            for j in range(1, i):
                yield f"a+{i} a{j} = q a{j} a+{i}", ad[i] @ a[j], q * (a[j] @ ad[i])
                yield f"a+{j} a{i} = q^-1 a{i} a+{j}", ad[j] @ a[i], (a[i] @ ad[j]) * (1 / q)
                yield f"a+{j} a+{i} = q a+{i} a+{j}", ad[j] @ ad[i], q * (ad[i] @ ad[j])
                yield f"a{j} a{i} = q a{i} a{j}", a[j] @ a[i], q * (a[i] @ a[j])
        return
    q1, q2, q3 = model.q1, model.q2, model.q3
    a = {"dn": so.ops["a_dn"], "up": so.ops["a_up"]}
    ad = {"dn": so.ops["ad_dn"], "up": so.ops["ad_up"]}
    for j in range(1, L + 1):
        for s in ("dn", "up"):
            yield f"{{a{j}{s},a{j}{s}}}=0", anticommutator(a[s][j], a[s][j]), zero
            yield f"{{a+{j}{s},a+{j}{s}}}=0", anticommutator(ad[s][j], ad[s][j]), zero
            # the on-site anticommutator is 1 on the no-double-occupancy space only
            # in the projected sense {a, a^+} = 1 - n_{-s}
            other = "up" if s == "dn" else "dn"
            yield f"{{a{j}{s},a+{j}{s}}}=1-n{j}{other}", anticommutator(a[s][j], ad[s][j]), one - ad[other][j] @ a[other][j]
    for i in range(1, L + 1):
        for j in range(1, i):
            yield f"a+{i}dn a{j}dn = q1 a{j}dn a+{i}dn", ad["dn"][i] @ a["dn"][j], q1 * (a["dn"][j] @ ad["dn"][i])
            yield f"a+{i}up a{j}up = q2 a{j}up a+{i}up", ad["up"][i] @ a["up"][j], q2 * (a["up"][j] @ ad["up"][i])
            yield f"a+{i}up a{j}dn = q3 a{j}dn a+{i}up", ad["up"][i] @ a["dn"][j], q3 * (a["dn"][j] @ ad["up"][i])
            yield f"a+{i}dn a{j}up = q3 a{j}up a+{i}dn", ad["dn"][i] @ a["up"][j], q3 * (a["up"][j] @ ad["dn"][i])
            yield f"a+{j}dn a+{i}dn = q1 a+{i}dn a+{j}dn", ad["dn"][j] @ ad["dn"][i], q1 * (ad["dn"][i] @ ad["dn"][j])
            yield f"a+{j}up a+{i}up = q2 a+{i}up a+{j}up", ad["up"][j] @ ad["up"][i], q2 * (ad["up"][i] @ ad["up"][j])
            yield f"a+{j}dn a+{i}up = q3 a+{i}up a+{j}dn", ad["dn"][j] @ ad["up"][i], q3 * (ad["up"][i] @ ad["dn"][j])
            yield f"a+{j}up a+{i}dn = q3 a+{i}dn a+{j}up", ad["up"][j] @ ad["dn"][i], q3 * (ad["dn"][i] @ ad["up"][j])
            sp_j = ad["up"][j] @ a["dn"][j]
            sm_i = ad["dn"][i] @ a["up"][i]
            sp_i = ad["up"][i] @ a["dn"][i]
            sm_j = ad["dn"][j] @ a["up"][j]
            yield (
                f"q1/q3 S+{j} S-{i} = q3/q2 S-{i} S+{j}",
                (q1 / q3) * (sp_j @ sm_i),
                (q3 / q2) * (sm_i @ sp_j),
            )
            yield (
                f"q3/q1 S+{i} S-{j} = q2/q3 S-{j} S+{i}",
                (q3 / q1) * (sp_i @ sm_j),
                (q2 / q3) * (sm_j @ sp_i),
            )


def commutation_suite(model: ModelSpec, tol: float = 1e-13) -> ResidualReport:
    """Evaluate every on-site and exchange relation (all pairs ``i > j``) as a matrix identity."""
    so = build_site_operators(model)
    per_relation: dict[str, float] = {}
    worst, worst_label = 0.0, ""
    for label, lhs, rhs in _relations(model, so):
        res = _maxabs(lhs - rhs)
        # group by relation type: strip site numbers
        key = "".join(ch for ch in label if not ch.isdigit())
        per_relation[key] = max(per_relation.get(key, 0.0), res)
        if res > worst:
            worst, worst_label = res, label
    return ResidualReport(
        "commutation_suite",
        model.params(),
        worst,
        tol,
        details={"worst_relation": worst_label, "per_relation": per_relation},
    )


def lax_embeddings(model: ModelSpec, lam: complex) -> list[ChainOperator]:
    """Embedded Lax operators ``[E_1, ..., E_L]`` on ``aux (x) chain``."""
    layout = model.layout(aux=True)
    _check_cap(layout.dim)
    lmat = model.lax()(lam)
    return [embed_two_space(lmat, j, layout, model.grading) for j in range(1, model.L + 1)]


def build_monodromy(model: ModelSpec, lam: complex) -> ChainOperator:
    """``T(lam) = E_L ... E_1`` as an ordinary matrix product on ``aux (x) chain``."""
    es = lax_embeddings(model, lam)
    t = es[-1].matrix
    for e in reversed(es[:-1]):
        t = t @ e.matrix
    return ChainOperator(es[0].layout, t)


def transfer_matrix(model: ModelSpec, lam: complex) -> ChainOperator:
    """Graded trace of the monodromy over the auxiliary space."""
    return graded_partial_trace(build_monodromy(model, lam), model.grading)


def commutation_of_transfers(model: ModelSpec, lam: complex, mu: complex, tol: float = 1e-10) -> ResidualReport:
    ta = transfer_matrix(model, lam).matrix
    tb = transfer_matrix(model, mu).matrix
    norm = np.linalg.norm(ta) * np.linalg.norm(tb)
    res = float(np.linalg.norm(ta @ tb - tb @ ta) / norm) if norm else 0.0
    params = model.params() | {"lambda": [complex(lam).real, complex(lam).imag], "mu": [complex(mu).real, complex(mu).imag]}
    return ResidualReport("commuting_transfers", params, res, tol)


def transfer_polynomial_coeffs(model: ModelSpec, radius: float | None = None) -> list[ChainOperator]:
    """Exact matrix coefficients ``c_0..c_L`` of ``tau(lam) = sum_k c_k lam^k``.

    The transfer matrix is a polynomial of degree ``L`` because every Lax entry is
    affine in ``lam``; sampling at the ``L + 1`` points ``r exp(2 pi i k / (L+1))``
    makes the interpolation system a discrete Fourier transform.
    """
    n = model.L + 1
    r = float(radius) if radius is not None else max(1.0, abs(model.eta))
    nodes = r * np.exp(2j * np.pi * np.arange(n) / n)
    samples = np.stack([transfer_matrix(model, lam).matrix for lam in nodes])
    coeffs = np.fft.fft(samples, axis=0) / n
    layout = model.layout()
    return [ChainOperator(layout, coeffs[k] / r**k) for k in range(n)]


def hamiltonian_from_transfer(model: ModelSpec) -> ChainOperator:
    """``H = tau'(0) tau(0)^-1`` with ``tau'(0)`` taken from the exact polynomial coefficients."""
    t0 = transfer_matrix(model, 0.0).matrix
    cond = np.linalg.cond(t0)
    if not np.isfinite(cond) or cond > SHIFT_COND_LIMIT:
        raise SingularShift(f"tau(0) has condition number {cond:.3g}")
    c1 = transfer_polynomial_coeffs(model)[1].matrix
    h = np.linalg.solve(t0.T, c1.T).T
    return ChainOperator(model.layout(), h)


def _bond(j: int, L: int) -> int:
    return j % L + 1


def build_xxx_hamiltonian(model: ModelSpec) -> ChainOperator:
    """``H = eta^-1 sum_j (a+_{j+1} a_j + a+_j a_{j+1} + 2 n_{j+1} n_j - 2 n_j)``, periodic."""
    if model.kind != "xxx":
        raise ValueError("build_xxx_hamiltonian needs an XXX model")
    so = build_site_operators(model)
    if model.L == 1:
        # the self-bond is the permutation of a site with itself: P - 1 = 0
        return 0 * so.identity
    a, ad, n = so.ops["a"], so.ops["ad"], so.ops["n"]
    h = 0 * so.identity
    for j in range(1, model.L + 1):
        k = _bond(j, model.L)
        h = h + ad[k] @ a[j] + ad[j] @ a[k] + 2 * (n[k] @ n[j]) - 2 * n[j]
    return h * (1 / model.eta)


def build_tj_hamiltonian(model: ModelSpec, exchange_form: int = 1) -> ChainOperator:
    """``eta H`` of the anyonic su(3) t-J chain, periodic.

    The spin exchange uses the anyon-dressed form
    ``S_j.S_k = 1/2 (r S+_k S-_j + r^-1 S+_j S-_k) + Sz_j Sz_k`` with ``k`` the larger
    site index of the bond; form 1 has ``S+ = a+_up a_dn`` and ``r = q3/q1``,
    form 2 has ``S+ = a+_dn a_up`` and ``r = q3/q2``.
    """
    if model.kind != "tj":
        raise ValueError("build_tj_hamiltonian needs a t-J model")
    so = build_site_operators(model)
    o = so.ops
    one = so.identity
    if model.L == 1:
        # the self-bond is the permutation of a site with itself: P = 1
        return one
    q1, q2, q3 = model.q1, model.q2, model.q3
    if exchange_form == 1:
        sp, sm, r = o["sp"], o["sm"], q3 / q1
        sz = o["sz"]
    elif exchange_form == 2:
        sp, sm, r = o["sm"], o["sp"], q3 / q2
        sz = {j: -1 * o["sz"][j] for j in o["sz"]}
    else:
        raise ValueError("exchange_form must be 1 or 2")
    h = 0 * one
    for j in range(1, model.L + 1):
        k = _bond(j, model.L)
        for s in ("dn", "up"):
            h = h + model.t * (o["ad_" + s][j] @ o["a_" + s][k] + o["ad_" + s][k] @ o["a_" + s][j])
        lo, hi = min(j, k), max(j, k)
        ss = 0.5 * (r * (sp[hi] @ sm[lo]) + (sp[lo] @ sm[hi]) * (1 / r)) + sz[j] @ sz[k]
        h = h + model.J * (ss + 0.25 * (o["n"][j] @ o["n"][k])) + (one - o["n"][j]) @ (one - o["n"][k])
    return h


def build_hamiltonian(model: ModelSpec) -> ChainOperator:
    """``H`` for XXX, ``eta H`` for t-J."""
    return build_xxx_hamiltonian(model) if model.kind == "xxx" else build_tj_hamiltonian(model)


def affine_fit(target: ChainOperator | np.ndarray, basis: ChainOperator | np.ndarray) -> tuple[complex, complex, float]:
    """Least-squares ``target ~ alpha * basis + beta * I``; returns ``(alpha, beta, max residual)``."""
    t = target.matrix if isinstance(target, ChainOperator) else np.asarray(target)
    b = basis.matrix if isinstance(basis, ChainOperator) else np.asarray(basis)
    eye = np.eye(t.shape[0])
    design = np.stack([b.ravel(), eye.ravel()], axis=1)
    coef, *_ = np.linalg.lstsq(design, t.ravel(), rcond=None)
    res = float(np.abs(design @ coef - t.ravel()).max())
    return complex(coef[0]), complex(coef[1]), res


# --- spectra -------------------------------------------------------------------------


def occupation_counts(layout: ChainLayout) -> dict[str, np.ndarray]:
    """Particle numbers of every chain basis state (diagonal of the number operators)."""
    d, L = layout.local_dim, layout.num_sites
    digits = np.indices((d,) * L).reshape(L, -1)
    if d == 2:
        return {"N": (digits == 1).sum(axis=0)}
    if d == 3:
        n_dn = (digits == 0).sum(axis=0)
        n_up = (digits == 1).sum(axis=0)
        return {"N": n_dn + n_up, "M": n_dn}
    raise ValueError(f"no particle-number convention for local dimension {d}")


def sector_indices(layout: ChainLayout, sector) -> np.ndarray:
    """Basis indices of the sector ``N`` (XXX) or ``(N, M)`` (t-J)."""
    counts = occupation_counts(layout)
    if np.isscalar(sector):
        sector = (int(sector),)
    mask = counts["N"] == sector[0]
    if len(sector) > 1:
        mask &= counts["M"] == sector[1]
    return np.nonzero(mask)[0]


def sector_labels(layout: ChainLayout) -> list[tuple[int, ...]]:
    counts = occupation_counts(layout)
    keys = zip(*(counts[k] for k in sorted(counts)))  # ("M", "N") for t-J
    labels = sorted({tuple(int(x) for x in key) for key in keys})
    if layout.local_dim == 3:
        return sorted((n, m) for m, n in labels)
    return labels


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    source: str = ""
    sector: tuple | None = None
    eigenvectors: np.ndarray | None = None

    def __len__(self):
        return len(self.eigenvalues)

    @cached_property
    def sorted(self) -> np.ndarray:
        ev = self.eigenvalues
        return ev[np.lexsort((np.round(ev.imag, 12), np.round(ev.real, 12)))]


def _is_hermitian(m: np.ndarray) -> bool:
    scale = max(1.0, float(np.abs(m).max())) if m.size else 1.0
    return bool(np.abs(m - m.conj().T).max() <= 1e-12 * scale) if m.size else True


def exact_spectrum(
    a: ChainOperator,
    sector=None,
    vectors: bool = False,
    source: str = "",
) -> Spectrum:
    """Full spectrum of ``a`` or of its block in a particle-number sector.

    Hermitian input goes to ``eigh``, anything else to the general solver.
    """
    _check_cap(a.layout.dim)
    m = a.matrix
    sec = None
    if sector is not None:
        idx = sector_indices(a.layout, sector)
        m = m[np.ix_(idx, idx)]
        sec = tuple(np.atleast_1d(sector).tolist())
    if m.shape[0] == 0:
        return Spectrum(np.zeros(0, dtype=complex), source, sec)
    try:
        if _is_hermitian(m):
            w, v = np.linalg.eigh(m)
            w = w.astype(complex)
        else:
            w, v = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigensolver failed on a {m.shape[0]}-dimensional block: {exc}") from exc
    order = np.lexsort((np.round(w.imag, 12), np.round(w.real, 12)))
    w = w[order]
    return Spectrum(w, source, sec, v[:, order] if vectors else None)
