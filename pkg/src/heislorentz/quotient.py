"""Lattices L < H, the deck group Z x|_Phi L and descent of the metric."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence
from weakref import WeakKeyDictionary

import numpy as np

from .geometry import SpacetimePoint, verify_map_isometry
from .lie_core import Check, bch_multiply, bracket, rank_of
from .paths import AutomorphismPath, check_Z_equivariance


class LatticeError(ValueError):
    pass


def parse_rational(x) -> Fraction:
    """Accepts ints, Fractions, and strings such as ``"1/2"`` or ``"-3"``."""
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


def _exact_solve(A: list, B: list) -> Optional[list]:
    """Solve A X = B over the rationals (A square); None if A is singular."""
    n = len(A)
    M = [[Fraction(v) for v in A[i]] + [Fraction(v) for v in B[i]] for i in range(n)]
    width = len(M[0])
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [row[n:width] for row in M]


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """Log-lattice Lambda = Z-span of ``log_basis`` (one vector of h per row)."""

    log_basis: np.ndarray
    exact: bool = True

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.log_basis, dtype=object))
        n = rank_of(rows[0])
        if rows.shape != (2 * n + 1, 2 * n + 1):
            raise LatticeError(f"need {2 * n + 1} basis vectors of length {2 * n + 1}")
        if self.exact:
            rows = np.array([[parse_rational(v) for v in r] for r in rows], dtype=object)
            if _exact_solve(rows.T.tolist(), np.eye(2 * n + 1, dtype=int).tolist()) is None:
                raise LatticeError("log_basis is linearly dependent")
        else:
            rows = rows.astype(float)
            if abs(np.linalg.det(rows)) < 1e-12:
                raise LatticeError("log_basis is linearly dependent")
        object.__setattr__(self, "log_basis", rows)

    @property
    def n(self) -> int:
        return rank_of(self.log_basis[0])

    @property
    def float_basis(self) -> np.ndarray:
        return np.asarray(self.log_basis, dtype=float)

    def coordinates(self, v) -> np.ndarray:
        """Coordinates of v over log_basis (exact when v and the basis are rational)."""
        v = np.asarray(v)
        if self.exact and v.dtype != float:
            sol = _exact_solve(self.log_basis.T.tolist(), [[parse_rational(x)] for x in v])
            return np.array([r[0] for r in sol], dtype=object)
        return np.linalg.solve(self.float_basis.T, np.asarray(v, dtype=float))

    def vector(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=object if self.exact else float)
        return coords @ self.log_basis


def standard_lattice(n: int, half_center: bool = True) -> LatticeSpec:
    """Z-span of X_1..Y_n and 1/2 Z (or Z when ``half_center`` is False)."""
    rows = [[Fraction(0)] * (2 * n + 1) for _ in range(2 * n + 1)]
    rows[0][0] = Fraction(1, 2) if half_center else Fraction(1)
    for i in range(1, 2 * n + 1):
        rows[i][i] = Fraction(1)
    return LatticeSpec(np.array(rows, dtype=object))


def _is_integral(coords, tol: float) -> bool:
    if np.asarray(coords).dtype == object:
        return all(Fraction(c).denominator == 1 for c in coords)
    c = np.asarray(coords, dtype=float)
    return bool(np.all(np.abs(c - np.round(c)) <= tol))


@dataclass(frozen=True)
class ClosureCheck(Check):
    pair: Optional[tuple] = None


def lattice_closure_check(L: LatticeSpec, tol: float = 1e-9) -> ClosureCheck:
    """exp(Lambda) is a subgroup when 1/2 [b_i, b_j] lies in Lambda for all i < j."""
    B = L.log_basis
    half = Fraction(1, 2) if L.exact else 0.5
    for i in range(len(B)):
        for j in range(i + 1, len(B)):
            coords = L.coordinates(half * bracket(B[i], B[j]))
            if not _is_integral(coords, tol):
                return ClosureCheck(False, 0.0, f"1/2[b_{i}, b_{j}] is not in the lattice", (i, j))
    return ClosureCheck(True)


def _as_exact(m) -> Optional[np.ndarray]:
    m = np.asarray(m)
    if m.dtype == object:
        return np.array([[parse_rational(v) for v in r] for r in m], dtype=object)
    if np.issubdtype(m.dtype, np.integer):
        return m.astype(object)
    return None


def lattice_preserved(m, L: LatticeSpec, tol: float = 1e-9) -> Check:
    """m and m^{-1} map every basis vector of Lambda into Lambda."""
    exact = _as_exact(m) if L.exact else None
    if exact is not None:
        images = [exact @ b for b in L.log_basis]
        inv = _exact_solve(exact.tolist(), np.eye(exact.shape[0], dtype=int).tolist())
        if inv is None:
            return Check(False, float("inf"), "map is singular")
        inv = np.array(inv, dtype=object)
        back = [inv @ b for b in L.log_basis]
    else:
        mf = np.asarray(m, dtype=float)
        Bf = L.float_basis
        images = [mf @ b for b in Bf]
        back = [np.linalg.solve(mf, b) for b in Bf]
    worst = 0.0
    for label, vecs in (("m", images), ("m^-1", back)):
        for i, v in enumerate(vecs):
            coords = L.coordinates(v) if exact is not None else np.linalg.solve(L.float_basis.T, v)
            if not _is_integral(coords, tol):
                return Check(False, float("inf"), f"{label} sends b_{i} outside the lattice")
            if exact is None:
                worst = max(worst, float(np.max(np.abs(coords - np.round(coords)))))
    return Check(True, worst)


@dataclass(frozen=True)
class DeckElement:
    q: int
    lam: tuple  # integer coordinates over the lattice basis

    @classmethod
    def identity(cls, n: int) -> "DeckElement":
        return cls(0, (0,) * (2 * n + 1))


_equivariance_cache: "WeakKeyDictionary[AutomorphismPath, Check]" = WeakKeyDictionary()


def ensure_equivariant(path: AutomorphismPath, tol: float = 1e-8) -> Check:
    chk = _equivariance_cache.get(path)
    if chk is None:
        chk = check_Z_equivariance(path, np.linspace(0.0, path.period, 16, endpoint=False), tol)
        _equivariance_cache[path] = chk
    return chk


class DeckRefused(ValueError):
    pass


def _phi_q(path: AutomorphismPath, q: int, exact: bool):
    power = path.meta.get("integer_power")
    if exact and power is not None:
        return power(q)
    return path.phi(q * path.period)


def deck_act(e: DeckElement, path: AutomorphismPath, L: LatticeSpec, x: SpacetimePoint, check: bool = True) -> SpacetimePoint:
    """(t, g).(q, lam) = (t + q alpha, Phi_{q alpha}(g) lam)."""
    if check:
        chk = ensure_equivariant(path)
        if not chk:
            raise DeckRefused(f"path is not equivariant with period {path.period:g} (residual {chk.residual:.3g})")
    g = np.asarray(x.g)
    exact = g.dtype == object and L.exact
    lam = L.vector(e.lam)
    m = _phi_q(path, e.q, exact)
    if not exact:
        lam = np.asarray(lam, dtype=float)
        m = np.asarray(m, dtype=float)
        g = g.astype(float)
    return SpacetimePoint(x.t + e.q * path.period, bch_multiply(m @ g, lam))


def deck_compose(e1: DeckElement, e2: DeckElement, path: AutomorphismPath, L: LatticeSpec) -> DeckElement:
    """The element acting as e1 followed by e2: (q1 + q2, Phi_{q2 alpha}(lam1) lam2)."""
    exact = L.exact and path.meta.get("integer_power") is not None
    m = _phi_q(path, e2.q, exact)
    lam1 = L.vector(e1.lam)
    lam2 = L.vector(e2.lam)
    if not exact:
        m = np.asarray(m, dtype=float)
        lam1 = np.asarray(lam1, dtype=float)
        lam2 = np.asarray(lam2, dtype=float)
    coords = L.coordinates(bch_multiply(m @ lam1, lam2))
    if exact:
        ints = tuple(int(c) for c in coords)
    else:
        ints = tuple(int(round(float(c))) for c in coords)
    return DeckElement(e1.q + e2.q, ints)


def fundamental_domain_samples(path: AutomorphismPath, L: LatticeSpec, count: int, rng: np.random.Generator) -> list:
    """t uniform in [0, alpha), g uniform in the unit box of log-lattice coordinates."""
    ts = rng.uniform(0.0, path.period, size=count)
    us = rng.uniform(0.0, 1.0, size=(count, L.float_basis.shape[0]))
    return [SpacetimePoint(float(t), u @ L.float_basis) for t, u in zip(ts, us)]


@dataclass(frozen=True)
class DeckReport:
    ok: bool
    refused: bool
    reason: str
    generator_residuals: dict = field(default_factory=dict)
    lattice_ok: bool = False
    max_residual: float = float("inf")
    samples: int = 0

    def __bool__(self) -> bool:
        return self.ok


def deck_generators(L: LatticeSpec) -> dict:
    n = L.n
    gens = {"translation": DeckElement(1, (0,) * (2 * n + 1))}
    for i in range(2 * n + 1):
        lam = [0] * (2 * n + 1)
        lam[i] = 1
        gens[f"b{i}"] = DeckElement(0, tuple(lam))
    return gens


def deck_isometry_report(
    path: AutomorphismPath,
    s,
    L: LatticeSpec,
    samples: int = 200,
    tol: float = 1e-6,
    seed: int = 0,
) -> DeckReport:
    """Every generator of Gamma must act isometrically on a fundamental-domain sample."""
    chk = ensure_equivariant(path)
    if not chk:
        return DeckReport(False, True, f"path is not equivariant with period {path.period:g}")
    closure = lattice_closure_check(L)
    preserved = [lattice_preserved(_phi_q(path, q, L.exact), L) for q in (-1, 1)]
    lattice_ok = bool(closure) and all(preserved)
    if not lattice_ok:
        why = closure.reason if not closure else next(p.reason for p in preserved if not p)
        return DeckReport(False, True, f"lattice incompatible: {why}")
    rng = np.random.default_rng(seed)
    pts = fundamental_domain_samples(path, L, samples, rng)
    residuals = {}
    for name, e in deck_generators(L).items():
        rep = verify_map_isometry(lambda x, e=e: deck_act(e, path, L, x, check=False), (path, s), (path, s), pts, tol)
        residuals[name] = rep.max_residual
    worst = max(residuals.values())
    return DeckReport(worst <= tol, False, "", residuals, True, worst, samples)
