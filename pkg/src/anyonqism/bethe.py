"""Bethe-ansatz equations, eigenvalues and energies, a root solver, and matching against exact spectra.

Roots are stored in the rescaled (real-line centred) variables. A root equal to
``INF`` is a rapidity at infinity: its scattering factors are 1 and it carries no
energy, and it is admissible only when its own equation holds in that limit.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, root

from .chain import ModelSpec, build_hamiltonian, exact_spectrum, transfer_matrix
from .errors import DegenerateRoots, NoConvergence, PoleAtLambda, PoleAtRoot
from .io import cpair

log = logging.getLogger(__name__)

INF = complex(np.inf, 0.0)
POLE_TOL = 1e-12
DEGENERATE_SEP = 1e-8
DEDUP_TOL = 1e-7
ACCEPT_RESIDUAL = 1e-9
LOG_TOL = 1e-11
LARGE_ROOT = 1e6
RESIDUE_TOL = 1e-6


def is_infinite(z) -> bool:
    return not np.isfinite(complex(z))


def _roots_tuple(xs) -> tuple[complex, ...]:
    return tuple(INF if is_infinite(x) else complex(x) for x in xs)


def _min_separation(xs) -> float:
    fin = [x for x in xs if not is_infinite(x)]
    if len(fin) < 2:
        return np.inf
    return min(abs(a - b) for a, b in itertools.combinations(fin, 2))


def _canonical(xs) -> tuple[complex, ...]:
    fin = sorted((x for x in xs if not is_infinite(x)), key=lambda z: (round(z.real, 7), round(z.imag, 7)))
    return tuple(fin) + (INF,) * (len(xs) - len(fin))


def _root_json(z):
    return "inf" if is_infinite(z) else cpair(z)


@dataclass(frozen=True)
class BetheRootsXXX:
    """``M`` magnon rapidities ``v`` of the anyonic XXX chain of length ``L``."""

    L: int
    M: int
    eta: complex
    q: complex
    v: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "v", _roots_tuple(self.v))
        object.__setattr__(self, "eta", complex(self.eta))
        object.__setattr__(self, "q", complex(self.q))
        if len(self.v) != self.M:
            raise ValueError(f"expected {self.M} roots, got {len(self.v)}")

    @classmethod
    def from_model(cls, model: ModelSpec, v) -> "BetheRootsXXX":
        v = _roots_tuple(v)
        return cls(model.L, len(v), model.eta, model.q, v)

    @property
    def degenerate(self) -> bool:
        return _min_separation(self.v) <= DEGENERATE_SEP

    @property
    def conjugation_closed(self) -> bool:
        fin = [x for x in self.v if not is_infinite(x)]
        return all(min((abs(np.conj(x) - y) for y in fin), default=np.inf) < 1e-7 for x in fin)

    @property
    def n_infinite(self) -> int:
        return sum(is_infinite(x) for x in self.v)

    def canonical(self) -> "BetheRootsXXX":
        return BetheRootsXXX(self.L, self.M, self.eta, self.q, _canonical(self.v))

    def to_json(self) -> dict:
        return {"kind": "xxx", "L": self.L, "M": self.M, "v": [_root_json(z) for z in self.v]}


@dataclass(frozen=True)
class BetheRootsTJ:
    """Charge rapidities ``u`` (``N`` of them) and spin rapidities ``v`` (``M``) of the t-J chain."""

    L: int
    N: int
    M: int
    eta: complex
    q1: complex
    q2: complex
    q3: complex
    u: tuple = ()
    v: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "u", _roots_tuple(self.u))
        object.__setattr__(self, "v", _roots_tuple(self.v))
        for name in ("eta", "q1", "q2", "q3"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if len(self.u) != self.N or len(self.v) != self.M:
            raise ValueError(f"expected {self.N} charge and {self.M} spin roots")
        if self.M > self.N:
            raise ValueError("M cannot exceed N")

    @classmethod
    def from_model(cls, model: ModelSpec, u, v) -> "BetheRootsTJ":
        u, v = _roots_tuple(u), _roots_tuple(v)
        return cls(model.L, len(u), len(v), model.eta, model.q1, model.q2, model.q3, u, v)

    @property
    def degenerate(self) -> bool:
        return min(_min_separation(self.u), _min_separation(self.v)) <= DEGENERATE_SEP

    @property
    def n_infinite(self) -> int:
        return sum(is_infinite(x) for x in self.u + self.v)

    def canonical(self) -> "BetheRootsTJ":
        return BetheRootsTJ(self.L, self.N, self.M, self.eta, self.q1, self.q2, self.q3, _canonical(self.u), _canonical(self.v))

    def to_json(self) -> dict:
        return {
            "kind": "tj",
            "L": self.L,
            "N": self.N,
            "M": self.M,
            "u": [_root_json(z) for z in self.u],
            "v": [_root_json(z) for z in self.v],
        }


@dataclass(frozen=True)
class QuantumNumberSet:
    """Branch integers (or half-integers) of the logarithmic equations, one per root."""

    charge: tuple = ()
    spin: tuple = ()

    def reduced(self, L: int, n_spin_window: int | None = None) -> "QuantumNumberSet":
        """Fold each number into the window ``(-L/2, L/2]`` (spin numbers use ``n_spin_window``)."""
        return QuantumNumberSet(
            tuple(_fold(x, L) for x in self.charge),
            tuple(_fold(x, n_spin_window or L) for x in self.spin),
        )


def _fold(x: float, period: int) -> float:
    y = (x + period / 2) % period - period / 2
    return period / 2 if np.isclose(y, -period / 2) else float(y)


# --- checks ------------------------------------------------------------------------


def _ratio(num, den, err=PoleAtRoot):
    if abs(den) < POLE_TOL:
        raise err(f"vanishing denominator at {den}")
    return num / den


def _scatter(x, y, shift, err=PoleAtRoot):
    """``(x - y + shift) / (x - y - shift)`` with a root at infinity giving 1."""
    if is_infinite(x) or is_infinite(y):
        return 1.0
    return _ratio(x - y + shift, x - y - shift, err)


def xxx_bae_residual(r: BetheRootsXXX) -> np.ndarray:
    """Product-form residuals ``lhs_a - rhs_a``, one per root."""
    eta, q, L, M = r.eta, r.q, r.L, r.M
    out = np.zeros(M, dtype=complex)
    for a, va in enumerate(r.v):
        lhs = 1.0 if is_infinite(va) else _ratio(va + 0.5j * eta, va - 0.5j * eta) ** L
        rhs = q ** (M - 1)
        for b, vb in enumerate(r.v):
            if b != a:
                rhs *= _scatter(va, vb, 1j * eta)
        out[a] = lhs - rhs
    return out


def xxx_bae_residual_unrescaled(r: BetheRootsXXX) -> np.ndarray:
    """Residuals of the same equations written in the pole variables ``w = -i v - eta/2``."""
    eta, q, L, M = r.eta, r.q, r.L, r.M
    w = [INF if is_infinite(x) else -1j * x - eta / 2 for x in r.v]
    out = np.zeros(M, dtype=complex)
    for a, wa in enumerate(w):
        lhs = 1.0 if is_infinite(wa) else _ratio(wa + eta, wa) ** L
        rhs = q ** (M - 1)
        for b, wb in enumerate(w):
            if b != a:
                rhs *= _scatter(wa, wb, eta)
        out[a] = lhs - rhs
    return out


def xxx_lambda(lam: complex, r: BetheRootsXXX) -> complex:
    """Transfer-matrix eigenvalue at spectral parameter ``lam`` for the root set ``r``."""
    eta, q, L, M = r.eta, r.q, r.L, r.M
    lam = complex(lam)
    t1 = (lam + eta) ** L
    t2 = lam**L * q ** (M - 1)
    for x in r.v:
        if is_infinite(x):
            continue
        w = -1j * x - eta / 2
        den = lam - w
        if abs(den) < POLE_TOL:
            raise PoleAtLambda(f"lambda = {lam} sits on the root pole {w}")
        t1 *= (lam - w - eta) / den
        t2 *= (lam - w + eta) / den
    return complex(t1 + t2)


def xxx_energy(r: BetheRootsXXX) -> complex:
    """``E = -eta sum 1/(v^2 + eta^2/4)`` (eigenvalue of ``H``)."""
    e = 0j
    for x in r.v:
        if is_infinite(x):
            continue
        e += _ratio(1.0, x * x + r.eta**2 / 4)
    return complex(-r.eta * e)


def _tj_prefactors(r: BetheRootsTJ) -> tuple[complex, complex]:
    N, M = r.N, r.M
    charge = r.q2 ** (N - M - 1) * r.q3**M
    spin = r.q1 ** (M - 1) * r.q2 ** (-(N - M - 1)) * r.q3 ** (N - 2 * M)
    return charge, spin


def tj_bae_residual(r: BetheRootsTJ) -> np.ndarray:
    """``N`` charge residuals followed by ``M`` spin residuals (product form)."""
    eta, L = r.eta, r.L
    pc, ps = _tj_prefactors(r)
    out = np.zeros(r.N + r.M, dtype=complex)
    for i, ui in enumerate(r.u):
        lhs = 1.0 if is_infinite(ui) else _ratio(ui + 0.5j * eta, ui - 0.5j * eta) ** L
        rhs = pc
        for k, uk in enumerate(r.u):
            if k != i:
                rhs *= _scatter(ui, uk, 1j * eta)
        for vl in r.v:
            rhs /= _scatter(ui, vl, 0.5j * eta)
        out[i] = lhs - rhs
    for j, vj in enumerate(r.v):
        lhs = ps
        for ui in r.u:
            lhs /= _scatter(vj, ui, 0.5j * eta)
        rhs = 1.0
        for l, vl in enumerate(r.v):
            if l != j:
                rhs /= _scatter(vj, vl, 1j * eta)
        out[r.N + j] = lhs - rhs
    return out


def _tj_unrescale(r: BetheRootsTJ):
    u = [INF if is_infinite(x) else -1j * x - r.eta / 2 for x in r.u]
    v = [INF if is_infinite(x) else -1j * x - r.eta for x in r.v]
    return u, v


def tj_bae_residual_unrescaled(r: BetheRootsTJ) -> np.ndarray:
    """The t-J equations in the pole variables of the eigenvalue (pole cancellation form)."""
    eta, L = r.eta, r.L
    pc, ps = _tj_prefactors(r)
    u, v = _tj_unrescale(r)
    out = np.zeros(r.N + r.M, dtype=complex)
    for i, ui in enumerate(u):
        lhs = 1.0 if is_infinite(ui) else _ratio(ui + eta, ui) ** L
        rhs = pc
        for k, uk in enumerate(u):
            if k != i:
                rhs *= _scatter(ui, uk, eta)
        for vl in v:
            if not (is_infinite(ui) or is_infinite(vl)):
                rhs *= _ratio(ui - vl - eta, ui - vl)
        out[i] = lhs - rhs
    for j, vj in enumerate(v):
        lhs = ps
        for ui in u:
            if not (is_infinite(vj) or is_infinite(ui)):
                lhs *= _ratio(vj - ui, vj - ui + eta)
        rhs = 1.0
        for l, vl in enumerate(v):
            if l != j:
                rhs /= _scatter(vj, vl, eta)
        out[r.N + j] = lhs - rhs
    return out


def tj_lambda(x: complex, r: BetheRootsTJ) -> complex:
    """Three-term transfer eigenvalue of the t-J chain at spectral parameter ``x``."""
    eta, L, N, M = r.eta, r.L, r.N, r.M
    x = complex(x)
    u, v = _tj_unrescale(r)
    t1 = (x + eta) ** L
    t2 = x**L * r.q1 ** (M - 1) * r.q3 ** (N - M)
    t3 = x**L * r.q2 ** (N - M - 1) * r.q3**M
    for ui in u:
        if is_infinite(ui):
            continue
        den = x - ui
        if abs(den) < POLE_TOL:
            raise PoleAtLambda(f"u = {x} sits on the charge pole {ui}")
        t1 *= (x - ui - eta) / den
        t3 *= (x - ui + eta) / den
    for vl in v:
        if is_infinite(vl):
            continue
        den = x - vl
        if abs(den) < POLE_TOL:
            raise PoleAtLambda(f"u = {x} sits on the spin pole {vl}")
        t2 *= (x - vl + eta) / den
        t3 *= (x - vl - eta) / den
    return complex(t1 + t2 + t3)


def tj_energy(r: BetheRootsTJ) -> complex:
    """``E = L - eta^2 sum 1/(u^2 + eta^2/4)`` (eigenvalue of ``eta H``)."""
    s = 0j
    for x in r.u:
        if not is_infinite(x):
            s += _ratio(1.0, x * x + r.eta**2 / 4)
    return complex(r.L - r.eta**2 * s)


def bae_residual(r) -> np.ndarray:
    return xxx_bae_residual(r) if isinstance(r, BetheRootsXXX) else tj_bae_residual(r)


def bethe_energy(r) -> complex:
    return xxx_energy(r) if isinstance(r, BetheRootsXXX) else tj_energy(r)


def bethe_lambda(lam: complex, r) -> complex:
    return xxx_lambda(lam, r) if isinstance(r, BetheRootsXXX) else tj_lambda(lam, r)


def pole_variables(r) -> list[complex]:
    """Finite poles of the eigenvalue expression (converted roots)."""
    if isinstance(r, BetheRootsXXX):
        return [-1j * x - r.eta / 2 for x in r.v if not is_infinite(x)]
    u, v = _tj_unrescale(r)
    return [z for z in u + v if not is_infinite(z)]


def lambda_residues(r, radius: float | None = None, points: int = 64) -> np.ndarray:
    """Relative residue of the eigenvalue at each pole, by a small contour integral.

    Each entry is ``|Res| / (radius * max|Lambda| on the contour)``: of order 1 for a
    genuine pole and at rounding level when the pole cancels.
    """
    poles = pole_variables(r)
    if not poles:
        return np.zeros(0)
    sep = min((abs(a - b) for a, b in itertools.combinations(poles, 2)), default=1.0)
    rad = radius if radius is not None else min(1e-5, 0.1 * sep) * max(1.0, abs(r.eta))
    phis = np.exp(2j * np.pi * (np.arange(points) + 0.5) / points)
    out = []
    for p in poles:
        # keep the contour resolvable in floating point for very large poles
        rp = rad * max(1.0, abs(p))
        vals = np.array([bethe_lambda(p + rp * z, r) for z in phis])
        res = rp * np.mean(vals * phis)
        out.append(abs(res) / (rp * np.abs(vals).max()))
    return np.array(out)


# --- solver ------------------------------------------------------------------------


def _theta_fn(x, a):
    return 2 * np.arctan(x / a)


class _Problem:
    """Finite-root subsystem of a sector with a fixed number of roots at infinity."""

    def __init__(self, model: ModelSpec, sector: tuple[int, ...], n_inf: tuple[int, ...]):
        self.model = model
        self.sector = sector
        self.n_inf = n_inf
        if model.kind == "xxx":
            (M,) = sector
            self.n_fin = (M - n_inf[0],)
        else:
            N, M = sector
            self.n_fin = (N - n_inf[0], M - n_inf[1])
        self.size = sum(self.n_fin)

    def roots(self, z):
        z = [complex(x) for x in z]
        m = self.model
        if m.kind == "xxx":
            return BetheRootsXXX.from_model(m, z + [INF] * self.n_inf[0])
        nc = self.n_fin[0]
        return BetheRootsTJ.from_model(m, z[:nc] + [INF] * self.n_inf[0], z[nc:] + [INF] * self.n_inf[1])

    def finite_index(self):
        if self.model.kind == "xxx":
            return list(range(self.n_fin[0]))
        N = self.sector[0]
        return list(range(self.n_fin[0])) + [N + j for j in range(self.n_fin[1])]

    def ratio(self, z) -> np.ndarray:
        """``lhs / rhs - 1`` for the finite roots (better scaled than the difference)."""
        r = self.roots(z)
        res = bae_residual(r)[self.finite_index()]
        rhs = self._rhs(r)[self.finite_index()]
        return res / rhs

    def _rhs(self, r) -> np.ndarray:
        # lhs - res = rhs; recover rhs from the difference at the same point
        if isinstance(r, BetheRootsXXX):
            lhs = np.array([1.0 if is_infinite(x) else ((x + 0.5j * r.eta) / (x - 0.5j * r.eta)) ** r.L for x in r.v])
            return lhs - xxx_bae_residual(r)
        lhs_c = [1.0 if is_infinite(x) else ((x + 0.5j * r.eta) / (x - 0.5j * r.eta)) ** r.L for x in r.u]
        res = tj_bae_residual(r)
        rhs_c = np.array(lhs_c) - res[: r.N]
        rhs_s = np.ones(r.M, dtype=complex)
        for j, vj in enumerate(r.v):
            for l, vl in enumerate(r.v):
                if l != j:
                    rhs_s[j] /= _scatter(vj, vl, 1j * r.eta)
        return np.concatenate([rhs_c, rhs_s])

    def groups(self, z):
        if self.model.kind == "xxx":
            return [np.asarray(z)]
        nc = self.n_fin[0]
        return [np.asarray(z[:nc]), np.asarray(z[nc:])]


def _infinity_allowed(model: ModelSpec, sector) -> tuple[bool, ...]:
    if model.kind == "xxx":
        (M,) = sector
        return (abs(model.q ** (M - 1) - 1) < 1e-12,)
    N, M = sector
    charge = model.q2 ** (N - M - 1) * model.q3**M
    spin = model.q1 ** (M - 1) * model.q2 ** (-(N - M - 1)) * model.q3 ** (N - 2 * M)
    return (abs(charge - 1) < 1e-12, abs(spin - 1) < 1e-12)


def _admissible(model: ModelSpec, sector, n_inf, allowed) -> bool:
    """Representation-theoretic admissibility of a split into finite and infinite roots.

    Where a level's phase prefactor is trivial the sector carries the untwisted symmetry:
    finite roots then describe highest-weight states, and each root at infinity is a
    lowering step that must stay inside the multiplet. Weights are counted as
    (holes, ups, downs) for t-J and (empty, occupied) for XXX.
    """
    if model.kind == "xxx":
        (M,) = sector
        (k,) = n_inf
        m_fin = M - k
        if not allowed[0]:
            return k == 0
        return 2 * m_fin <= model.L and k <= model.L - 2 * m_fin
    N, M = sector
    kc, ks = n_inf
    n_fin, m_fin = N - kc, M - ks
    if m_fin > n_fin or (kc and not allowed[0]) or (ks and not allowed[1]):
        return False
    h, u, d = model.L - n_fin, n_fin - m_fin, m_fin
    if allowed[0] and (h < u or kc > h - u):
        return False
    if allowed[1] and (u < d or ks > u + kc - d):
        return False
    return True


def _problems(model: ModelSpec, sector) -> list[_Problem]:
    allowed = _infinity_allowed(model, sector)
    ranges = [range(c + 1) for c in sector]
    return [
        _Problem(model, sector, n)
        for n in itertools.product(*ranges)
        if _admissible(model, sector, n, allowed)
    ]


def _split(z):
    return np.concatenate([z.real, z.imag])


def _join(x):
    n = len(x) // 2
    return x[:n] + 1j * x[n:]


def _sym_coords(groups) -> np.ndarray:
    return np.concatenate([np.poly(g)[1:] if len(g) else np.zeros(0) for g in groups])


def _polish(prob: _Problem, z0, deflate=()) -> np.ndarray | None:
    """Solve the ratio equations from ``z0``; ``deflate`` lists symmetric coordinates to repel."""

    def fun(x):
        z = _join(x)
        try:
            with np.errstate(all="ignore"):
                f = prob.ratio(z)
                if deflate:
                    s = _sym_coords(prob.groups(z))
                    f = f * np.prod([1.0 + 1.0 / max(np.sum(np.abs(s - d) ** 2), 1e-300) for d in deflate])
        except ZeroDivisionError:
            return np.full(2 * prob.size, 1e6)
        if not np.all(np.isfinite(f)):
            return np.full(2 * prob.size, 1e6)
        return _split(f)

    sol = root(fun, _split(np.asarray(z0, dtype=complex)), method="hybr", options={"xtol": 1e-14})
    z = _join(sol.x)
    if not np.all(np.isfinite(z)) or np.abs(z).max(initial=0) > LARGE_ROOT:
        return None
    # undeflated polish
    if deflate:
        sol = root(lambda x: _fun_plain(prob, x), _split(z), method="hybr", options={"xtol": 1e-15})
        z = _join(sol.x)
    return z


def _fun_plain(prob, x):
    z = _join(x)
    try:
        with np.errstate(all="ignore"):
            f = prob.ratio(z)
    except ZeroDivisionError:
        return np.full(2 * prob.size, 1e6)
    return _split(f) if np.all(np.isfinite(f)) else np.full(2 * prob.size, 1e6)


def _accept(prob: _Problem, z):
    """Return the canonical root set when ``z`` is a valid solution, else ``None``."""
    if z is None:
        return None
    try:
        r = prob.roots(z)
        if r.degenerate:
            return None
        with np.errstate(all="ignore"):
            res = bae_residual(r)
        if not np.all(np.isfinite(res)) or np.abs(res).max(initial=0) >= ACCEPT_RESIDUAL:
            return None
        # near-collisions can satisfy the product form to high accuracy without
        # cancelling the poles of the eigenvalue; those are not eigenstates
        if np.any(lambda_residues(r) > RESIDUE_TOL):
            return None
        bethe_energy(r)
    except ZeroDivisionError:
        return None
    return r.canonical()


class _Registry:
    """Found root sets, deduplicated under permutation."""

    def __init__(self):
        self.items = []

    def add(self, r) -> bool:
        for other in self.items:
            if self._same(r, other):
                return False
        self.items.append(r)
        return True

    @staticmethod
    def _same(a, b) -> bool:
        ga = (a.v,) if isinstance(a, BetheRootsXXX) else (a.u, a.v)
        gb = (b.v,) if isinstance(b, BetheRootsXXX) else (b.u, b.v)
        for x, y in zip(ga, gb):
            if len(x) != len(y):
                return False
            for p, s in zip(x, y):
                if is_infinite(p) != is_infinite(s):
                    return False
                if not is_infinite(p) and abs(p - s) > DEDUP_TOL:
                    return False
        return True

    def sorted(self):
        def k(r):
            e = bethe_energy(r)
            return (round(e.real, 9), round(e.imag, 9), str(r.to_json()))

        return sorted(self.items, key=k)


def _seeds(prob: _Problem, rng: np.random.Generator, count: int):
    """Random seeds cycling through real, scattered complex and two-string shapes."""
    eta = abs(prob.model.eta)
    sizes = prob.n_fin if prob.model.kind == "tj" else prob.n_fin[:1]
    for s in range(count):
        parts = []
        for n in sizes:
            z = rng.uniform(-1.5, 1.5, n) * eta * (1 + s % 3) + 0j
            kind = s % 3
            if kind == 0:
                z = z + 1j * 1e-3 * rng.normal(size=n)
            elif kind == 1:
                z = z + 1j * rng.normal(0, 0.5 * eta, n)
            elif n >= 2:
                z[1] = z[0]
                half = 0.5 * eta * (1 + rng.uniform(0.02, 0.3))
                z[0] += 1j * half
                z[1] -= 1j * half
            parts.append(z)
        yield np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def _solve_multistart(model, sector, samples, rng, registry, failures):
    for prob in _problems(model, sector):
        if prob.size == 0:
            r = _accept(prob, [])
            if r is not None:
                registry.add(r)
            continue
        deflate = []
        for z0 in _seeds(prob, rng, samples):
            z = _polish(prob, z0, deflate)
            r = _accept(prob, z)
            if r is None:
                failures.append({"strategy": "multistart", "n_inf": prob.n_inf, "seed": [_root_json(x) for x in z0]})
                continue
            if registry.add(r):
                zc = [x for x in (r.v if isinstance(r, BetheRootsXXX) else r.u + r.v) if not is_infinite(x)]
                deflate.append(_sym_coords(prob.groups(np.array(zc))))


def _newton(fun, z0, tol=LOG_TOL, maxiter=100):
    """Damped Newton iteration for a holomorphic system with a complex-step Jacobian."""
    z = np.asarray(z0, dtype=complex)
    f = fun(z)
    for _ in range(maxiter):
        if np.abs(f).max(initial=0) < tol:
            return z
        h = 1e-7 * (1 + np.abs(z))
        jac = np.empty((len(z), len(z)), dtype=complex)
        for k in range(len(z)):
            dz = np.zeros_like(z)
            dz[k] = h[k]
            jac[:, k] = (fun(z + dz) - f) / h[k]
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular Jacobian") from exc
        t = 1.0
        while t > 1e-4:
            zn = z + t * step
            fn = fun(zn)
            if np.all(np.isfinite(fn)) and np.abs(fn).max() < np.abs(f).max():
                break
            t /= 2
        else:
            raise NoConvergence(f"line search stalled at |F| = {np.abs(f).max():.3g}")
        z, f = zn, fn
    if np.abs(f).max(initial=0) < tol:
        return z
    raise NoConvergence(f"no convergence after {maxiter} iterations, |F| = {np.abs(f).max():.3g}")


def _log_system(model: ModelSpec, sector, qn: QuantumNumberSet):
    eta = model.eta
    if model.kind == "xxx":
        (M,) = sector
        th = np.angle(model.q)

        def fun(z):
            out = np.empty(M, dtype=complex)
            for a in range(M):
                s = sum(_theta_fn(z[a] - z[b], eta) for b in range(M) if b != a)
                out[a] = model.L * _theta_fn(z[a], eta / 2) - s + (M - 1) * th - 2 * np.pi * qn.charge[a]
            return out

        return fun
    N, M = sector
    th1, th2, th3 = (np.angle(x) for x in (model.q1, model.q2, model.q3))
    phi_c = (N - M - 1) * th2 + M * th3
    phi_s = (M - 1) * th1 - (N - M - 1) * th2 + (N - 2 * M) * th3

    def fun(z):
        u, v = z[:N], z[N:]
        out = np.empty(N + M, dtype=complex)
        for i in range(N):
            s = sum(_theta_fn(u[i] - u[k], eta) for k in range(N) if k != i)
            s -= sum(_theta_fn(u[i] - v[l], eta / 2) for l in range(M))
            out[i] = model.L * _theta_fn(u[i], eta / 2) - 2 * np.pi * qn.charge[i] + phi_c - s
        for j in range(M):
            lhs = sum(_theta_fn(v[j] - u[i], eta / 2) for i in range(N))
            s = sum(_theta_fn(v[j] - v[l], eta) for l in range(M) if l != j)
            out[N + j] = lhs - 2 * np.pi * qn.spin[j] + phi_s - s
        return out

    return fun


def _qn_offsets(model: ModelSpec, sector) -> tuple[float, float]:
    if model.kind == "xxx":
        (M,) = sector
        return ((model.L - M + 1) / 2 % 1, 0.0)
    N, M = sector
    return ((model.L - N + 1 + M) / 2 % 1, (N - M + 1) / 2 % 1)


def quantum_number_sets(model: ModelSpec, sector) -> list[QuantumNumberSet]:
    """All strictly increasing branch-number choices in the folded windows."""
    off_c, off_s = _qn_offsets(model, sector)
    L = model.L

    def window(period, off):
        vals = [k + off for k in range(-period, period + 1)]
        return sorted({_fold(x, period) for x in vals})

    if model.kind == "xxx":
        (M,) = sector
        return [QuantumNumberSet(c) for c in itertools.combinations(window(L, off_c), M)]
    N, M = sector
    spins = itertools.combinations(window(max(N, 1), off_s), M) if N else [()]
    spins = list(spins)
    return [QuantumNumberSet(c, s) for c in itertools.combinations(window(L, off_c), N) for s in spins]


def _log_seed(model: ModelSpec, sector, qn: QuantumNumberSet):
    eta = model.eta
    if model.kind == "xxx":
        (M,) = sector
        shift = (M - 1) * np.angle(model.q)
        args = [(2 * np.pi * i - shift) / (2 * model.L) for i in qn.charge]
        if any(abs(np.cos(a)) < 1e-9 for a in args):
            return None
        return np.array([eta / 2 * np.tan(a) for a in args], dtype=complex)
    N, M = sector
    th1, th2, th3 = np.angle(model.phases)
    phi_c = (N - M - 1) * th2 + M * th3
    args = [(2 * np.pi * i - phi_c) / (2 * model.L) for i in qn.charge]
    if any(abs(np.cos(a)) < 1e-9 for a in args):
        return None
    u = np.array([eta / 2 * np.tan(a) for a in args], dtype=complex)
    v = []
    e = float(np.real(eta))
    for j in qn.spin:
        target = 2 * np.pi * j
        f = lambda x: sum(_theta_fn(x - ui.real, e / 2) for ui in u) - target
        lo, hi = -1e3, 1e3
        if f(lo) * f(hi) > 0:
            return None
        v.append(brentq(f, lo, hi))
    return np.concatenate([u, np.array(v, dtype=complex)])


def _solve_log_newton(model, sector, registry, failures, quantum_numbers=None):
    zero = (0,) * len(sector)
    if not _admissible(model, sector, zero, _infinity_allowed(model, sector)):
        return
    prob = _Problem(model, sector, zero)
    sets = [quantum_numbers] if quantum_numbers is not None else quantum_number_sets(model, sector)
    if prob.size == 0:
        r = _accept(prob, [])
        if r is not None:
            registry.add(r)
        return
    period_s = max(sector[0], 1)
    for qn in sets:
        qn = qn.reduced(model.L, period_s)
        z0 = _log_seed(model, sector, qn)
        if z0 is None:
            failures.append({"strategy": "log_newton", "quantum_numbers": list(qn.charge + qn.spin), "reason": "free seed at infinity"})
            continue
        try:
            with np.errstate(all="ignore"):
                z = _newton(_log_system(model, sector, qn), z0)
        except (NoConvergence, ZeroDivisionError, FloatingPointError) as exc:
            failures.append({"strategy": "log_newton", "quantum_numbers": list(qn.charge + qn.spin), "reason": str(exc)})
            continue
        r = _accept(prob, z)
        if r is None:
            failures.append({"strategy": "log_newton", "quantum_numbers": list(qn.charge + qn.spin), "reason": "rejected"})
            continue
        registry.add(r)


def _phase_angles(model: ModelSpec) -> np.ndarray:
    return np.angle(np.array(model.phases))


def _model_at_angles(model: ModelSpec, angles) -> ModelSpec:
    if model.kind == "xxx":
        return ModelSpec.xxx(model.L, model.eta, angles[0])
    return ModelSpec.tj(model.L, model.eta, *angles)


def continue_roots(start, target: ModelSpec, steps: int = 32, start_angles=None):
    """Track a finite root set from its own statistical angles to those of ``target``.

    The angles move linearly (the phases along the unit circle) with adaptive steps; a
    secant predictor is corrected by the product-form equations at each point.
    Raises ``NoConvergence`` when the step size collapses and ``DegenerateRoots`` when
    two roots collide along the path.
    """
    if start.n_infinite:
        raise NoConvergence("roots at infinity cannot be continued")
    if isinstance(start, BetheRootsXXX):
        sector = (start.M,)
        a0 = np.angle([start.q]) if start_angles is None else np.asarray(start_angles, dtype=float)
        zs = np.array(start.v, dtype=complex)
    else:
        sector = (start.N, start.M)
        a0 = np.angle([start.q1, start.q2, start.q3]) if start_angles is None else np.asarray(start_angles, dtype=float)
        zs = np.array(start.u + start.v, dtype=complex)
    a1 = _phase_angles(target)
    if zs.size == 0:
        r = _accept(_Problem(target, sector, (0,) * len(sector)), zs)
        if r is None:
            raise NoConvergence("endpoint rejected by the acceptance checks")
        return r
    # shortest way round for each angle
    a1 = a0 + (a1 - a0 + np.pi) % (2 * np.pi) - np.pi
    zero = (0,) * len(sector)
    t, dt, prev = 0.0, 1.0 / steps, None
    while t < 1.0 - 1e-15:
        tn = min(1.0, t + dt)
        prob = _Problem(_model_at_angles(target, a0 + tn * (a1 - a0)), sector, zero)
        guess = zs if prev is None else zs + (zs - prev[0]) * (tn - t) / max(t - prev[1], 1e-12)
        z = _polish(prob, guess)
        ok = z is not None and np.abs(_fun_plain(prob, _split(z))).max() < 1e-10
        if ok and np.abs(z - zs).max() < 0.5 * max(1.0, abs(target.eta)):
            if _min_separation(list(z)) <= DEGENERATE_SEP:
                raise DegenerateRoots(f"roots collide at t = {tn:.4f}")
            prev, zs, t = (zs, t), z, tn
            dt = min(dt * 1.5, 1.0 / steps)
        else:
            dt /= 2
            if dt < 1e-4:
                raise NoConvergence(f"path stalled at t = {t:.4f}")
    r = _accept(_Problem(target, sector, zero), zs)
    if r is None:
        raise NoConvergence("endpoint rejected by the acceptance checks")
    return r


def _solve_homotopy(model, sector, samples, rng, registry, failures, steps=32):
    ref_model = _model_at_angles(model, np.zeros(len(model.phases)))
    ref = _Registry()
    _solve_log_newton(ref_model, sector, ref, [])
    _solve_multistart(ref_model, sector, max(samples // 4, 8), rng, ref, [])
    for start in ref.sorted():
        try:
            registry.add(continue_roots(start, model, steps))
        except (NoConvergence, DegenerateRoots) as exc:
            failures.append({"strategy": "homotopy", "start": start.to_json(), "reason": f"{type(exc).__name__}: {exc}"})


STRATEGIES = ("log_newton", "multistart", "homotopy", "auto")


def normalize_sector(model: ModelSpec, sector) -> tuple[int, ...]:
    sec = tuple(int(x) for x in np.atleast_1d(sector))
    if model.kind == "xxx":
        if len(sec) != 1 or not 0 <= sec[0] <= model.L:
            raise ValueError(f"XXX sector must be 0 <= M <= L, got {sector}")
    else:
        if len(sec) != 2 or not 0 <= sec[1] <= sec[0] <= model.L:
            raise ValueError(f"t-J sector must be 0 <= M <= N <= L, got {sector}")
    return sec


def solve_bae(
    model: ModelSpec,
    sector,
    strategy: str = "auto",
    *,
    samples: int = 120,
    seed: int = 0,
    quantum_numbers: QuantumNumberSet | None = None,
    failures: list | None = None,
) -> list:
    """Find Bethe root sets of ``model`` in ``sector`` (``M`` for XXX, ``(N, M)`` for t-J).

    ``strategy`` is one of ``log_newton``, ``multistart``, ``homotopy`` or ``auto``
    (log_newton followed by multistart). Per-seed and per-path failures are appended to
    ``failures`` when given. Only sets with product-form residual below 1e-9 are returned,
    in a canonical order.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    sector = normalize_sector(model, sector)
    rng = np.random.default_rng(seed)
    registry = _Registry()
    fails = failures if failures is not None else []
    if strategy in ("log_newton", "auto"):
        _solve_log_newton(model, sector, registry, fails, quantum_numbers)
    if strategy in ("multistart", "auto"):
        _solve_multistart(model, sector, samples, rng, registry, fails)
    if strategy == "homotopy":
        _solve_homotopy(model, sector, samples, rng, registry, fails)
    if strategy != "homotopy":
        # sentinel sets need the multistart path; log_newton only covers finite roots
        if strategy == "log_newton":
            for prob in _problems(model, sector):
                if prob.size == 0 and any(prob.n_inf):
                    r = _accept(prob, [])
                    if r is not None:
                        registry.add(r)
    for f in fails:
        log.debug("bethe solver: %s", f)
    return registry.sorted()


# --- matching ----------------------------------------------------------------------


@dataclass(frozen=True)
class MatchEntry:
    roots: object
    energy: complex
    lambdas: tuple
    matched_energy: complex | None
    energy_residual: float
    lambda_residual: float
    bae_residual: float

    @property
    def residual(self) -> float:
        return max(self.energy_residual, self.lambda_residual)

    def to_json(self) -> dict:
        c = lambda z: None if z is None else cpair(z)
        return {
            "roots": self.roots.to_json(),
            "energy": c(self.energy),
            "lambda": [c(x) for x in self.lambdas],
            "matched_energy": c(self.matched_energy),
            "energy_residual": self.energy_residual,
            "lambda_residual": self.lambda_residual,
            "bae_residual": self.bae_residual,
        }


@dataclass(frozen=True)
class MatchReport:
    sector: tuple
    test_points: tuple
    tol: float
    entries: list = field(default_factory=list)
    ed_energies: tuple = ()
    unmatched_levels: tuple = ()

    @property
    def matched(self) -> list:
        return [e for e in self.entries if e.matched_energy is not None]

    @property
    def unmatched_roots(self) -> list:
        return [e for e in self.entries if e.matched_energy is None]

    @property
    def completeness_deficit(self) -> int:
        return len(self.unmatched_levels)

    @property
    def all_matched(self) -> bool:
        return not self.unmatched_roots

    def to_json(self) -> dict:
        c = cpair
        return {
            "sector": list(self.sector),
            "test_points": [c(x) for x in self.test_points],
            "tol": self.tol,
            "n_root_sets": len(self.entries),
            "n_matched": len(self.matched),
            "sector_dim": len(self.ed_energies),
            "completeness_deficit": self.completeness_deficit,
            "entries": [e.to_json() for e in self.entries],
            "unmatched_levels": [c(x) for x in self.unmatched_levels],
        }


DEFAULT_TEST_POINTS = (0.37 + 0.21j, -0.83 + 0.4j, 1.3 - 0.55j)


def match_spectrum(model: ModelSpec, sector, root_sets, test_lambdas=DEFAULT_TEST_POINTS, tol: float = 1e-7) -> MatchReport:
    """Compare every root set's energy and transfer eigenvalues with the sector's exact spectrum."""
    sector = normalize_sector(model, sector)
    ed_sector = sector if model.kind == "tj" else sector[0]
    energies = exact_spectrum(build_hamiltonian(model), ed_sector).eigenvalues
    taus = [exact_spectrum(transfer_matrix(model, lam), ed_sector).eigenvalues for lam in test_lambdas]
    claimed = np.zeros(len(energies), dtype=bool)
    entries = []
    for r in root_sets:
        e = bethe_energy(r)
        lams = tuple(bethe_lambda(lam, r) for lam in test_lambdas)
        scale = max(1.0, abs(e))
        de = np.abs(energies - e) / scale
        dl = max(
            (float(np.min(np.abs(t - x)) / max(1.0, abs(x))) for t, x in zip(taus, lams)),
            default=0.0,
        )
        # each ED level (with multiplicity) can be claimed by one root set only
        order = np.argsort(de + claimed * 1e3)
        best = int(order[0]) if len(order) else -1
        ok = best >= 0 and not claimed[best] and de[best] < tol and dl < tol
        if ok:
            claimed[best] = True
        entries.append(
            MatchEntry(
                r,
                e,
                lams,
                complex(energies[best]) if ok else None,
                float(de[best]) if best >= 0 else np.inf,
                dl,
                float(np.abs(bae_residual(r)).max(initial=0.0)),
            )
        )
    return MatchReport(
        sector,
        tuple(complex(x) for x in test_lambdas),
        tol,
        entries,
        tuple(complex(x) for x in energies),
        tuple(complex(x) for x in energies[~claimed]),
    )
