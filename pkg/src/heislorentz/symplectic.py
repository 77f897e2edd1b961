"""Splittings h = p + R Z0, the form w0 on p, and the predicates built on it."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .lie_core import Check, DimensionError, bracket_form, is_automorphism, is_derivation, rank_of

DEFINITE_THRESHOLD = 1e-10


class InvalidSplittingError(ValueError):
    pass


class ComplementError(ValueError):
    """An endomorphism fails to preserve the complement p."""

    def __init__(self, message: str, basis_index: int):
        super().__init__(message)
        self.basis_index = basis_index


class OffComplementWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Splitting:
    """A central generator ``z0`` and a basis ``p_basis`` of a complement p."""

    z0: np.ndarray
    p_basis: np.ndarray  # (2n, 2n+1), one basis vector per row
    tol: float = 1e-12
    frame: np.ndarray = field(init=False, repr=False)
    omega: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        z0 = np.asarray(self.z0, dtype=float)
        P = np.atleast_2d(np.asarray(self.p_basis, dtype=float))
        n = rank_of(z0)
        if P.shape != (2 * n, 2 * n + 1):
            raise InvalidSplittingError(f"p_basis must be {2 * n} vectors of length {2 * n + 1}")
        if abs(z0[0]) <= self.tol or np.any(np.abs(z0[1:]) > self.tol):
            raise InvalidSplittingError("z0 must be a nonzero multiple of Z")
        frame = np.column_stack([z0, P.T])
        if abs(np.linalg.det(frame)) <= self.tol:
            raise InvalidSplittingError("z0 and p_basis are linearly dependent")
        object.__setattr__(self, "z0", z0)
        object.__setattr__(self, "p_basis", P)
        object.__setattr__(self, "frame", frame)
        # [p_i, p_j] = omega_ij z0
        object.__setattr__(self, "omega", P @ bracket_form(n) @ P.T / z0[0])

    @property
    def n(self) -> int:
        return rank_of(self.z0)

    def coefficients(self, v) -> np.ndarray:
        """Coordinates of v over (z0, p_1, ..., p_2n)."""
        return np.linalg.solve(self.frame, np.asarray(v, dtype=float))

    def from_p(self, coeffs) -> np.ndarray:
        """The vector of p with the given coefficients over p_basis."""
        return np.asarray(coeffs, dtype=float) @ self.p_basis

    def in_frame(self, m) -> np.ndarray:
        """Matrix of the map m in the basis (z0, p_1, ..., p_2n)."""
        return np.linalg.solve(self.frame, np.asarray(m, dtype=float) @ self.frame)

    def scaled(self, c: float) -> "Splitting":
        return Splitting(c * self.z0, self.p_basis)


def standard_splitting(n: int, z0_scale: float = 1.0) -> Splitting:
    z0 = np.zeros(2 * n + 1)
    z0[0] = z0_scale
    return Splitting(z0, np.eye(2 * n + 1)[1:])


def omega0(s: Splitting, X, Y, tol: float = 1e-9) -> float:
    """The scalar w0(X, Y) with [X, Y] = w0(X, Y) z0.

    Components of X or Y along z0 do not change the bracket; if they exceed
    ``tol`` an :class:`OffComplementWarning` is emitted.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    for name, v in (("X", X), ("Y", Y)):
        off = s.coefficients(v)[0]
        if abs(off) > tol:
            warnings.warn(f"{name} has a z0-component {off:.3g}; projected out", OffComplementWarning, stacklevel=2)
    return float(X @ bracket_form(s.n) @ Y / s.z0[0])


def restrict(m, s: Splitting, tol: float = 1e-9) -> np.ndarray:
    """The 2n x 2n block of m on p (coordinates over p_basis).

    Raises :class:`ComplementError` naming the first basis vector whose image
    leaves p.
    """
    m = np.asarray(m, dtype=float)
    n = s.n
    if m.shape == (2 * n, 2 * n):
        return m
    if m.shape != (2 * n + 1, 2 * n + 1):
        raise DimensionError(f"map of shape {m.shape} does not act on h_{n}")
    mf = s.in_frame(m)
    leak = np.abs(mf[0, 1:])
    if leak.size and leak.max() > tol:
        j = int(np.argmax(leak > tol))
        raise ComplementError(f"image of p_{j + 1} has z0-component {mf[0, j + 1]:.3g}", j)
    return mf[1:, 1:]


def is_inf_symplectic(nu, s: Splitting, tol: float = 1e-9) -> Check:
    """w0(nu X, Y) + w0(X, nu Y) = 0 on all pairs of basis vectors of p."""
    N = restrict(nu, s, tol)
    R = N.T @ s.omega + s.omega @ N
    res = float(np.max(np.abs(R)))
    return Check(res <= tol, res, "" if res <= tol else "not infinitesimally symplectic")


@dataclass(frozen=True)
class DefinitenessVerdict:
    verdict: Literal["definite", "indefinite", "degenerate"]
    witness: Optional[np.ndarray]
    min_eigenvalue: float

    @property
    def definite(self) -> bool:
        return self.verdict == "definite"


def definiteness(nu, s: Splitting, threshold: float = DEFINITE_THRESHOLD) -> DefinitenessVerdict:
    """Classify X -> w0(X, nu X) on p by the spectrum of its symmetric part.

    A non-definite verdict carries a unit witness X in p with w0(X, nu X) <= 0.
    """
    N = restrict(nu, s)
    form = s.omega @ N
    sym = 0.5 * (form + form.T)
    evals, evecs = np.linalg.eigh(sym)
    lo = float(evals[0])
    if lo > threshold:
        return DefinitenessVerdict("definite", None, lo)
    w = s.from_p(evecs[:, 0])
    w = w / np.linalg.norm(w)
    return DefinitenessVerdict("degenerate" if lo >= -threshold else "indefinite", w, lo)


def in_M_p(delta, s: Splitting, tol: float = 1e-9) -> Check:
    """Membership in M_p: derivation, kills z0, preserves p, definite on p."""
    delta = np.asarray(delta, dtype=float)
    der = is_derivation(delta, tol)
    if not der:
        return Check(False, der.residual, "not a derivation")
    kz = float(np.linalg.norm(delta @ s.z0))
    if kz > tol:
        return Check(False, kz, "does not kill z0")
    try:
        restrict(delta, s, tol)
    except ComplementError as e:
        return Check(False, float("inf"), f"does not preserve p: {e}")
    v = definiteness(delta, s)
    if not v.definite:
        return Check(False, max(der.residual, kz), f"restriction to p is {v.verdict} (min eigenvalue {v.min_eigenvalue:.3g})")
    return Check(True, max(der.residual, kz))


@dataclass(frozen=True)
class ComplementChange:
    """Canonical isomorphism a: p -> p', a(X) = X + alpha(X) z0, and A with w0(A, .) = alpha."""

    a_map: np.ndarray
    alpha: np.ndarray
    A: np.ndarray


def canonical_iso(s: Splitting, s_prime: Splitting, tol: float = 1e-9) -> ComplementChange:
    if s.n != s_prime.n or np.max(np.abs(s.z0 - s_prime.z0)) > tol * max(1.0, abs(s.z0[0])):
        raise InvalidSplittingError("splittings must share the central generator z0")
    # p_i = c0 z0 + (element of p'), so a(p_i) = p_i - c0 z0
    c0 = np.linalg.solve(s_prime.frame, s.p_basis.T)[0]
    alpha = -c0
    images = s.p_basis + alpha[:, None] * s.z0[None, :]
    a_map = np.column_stack([s.z0, images.T]) @ np.linalg.inv(s.frame)
    A = s.from_p(np.linalg.solve(s.omega.T, alpha))
    chk = is_automorphism(a_map, tol)
    if not chk:
        raise InvalidSplittingError(f"canonical map is not an automorphism: {chk.reason}")
    return ComplementChange(a_map, alpha, A)
