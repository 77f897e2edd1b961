"""Arithmetic on the Heisenberg algebra h_n and the warped algebras s_lambda.

Vectors of h_n are 1-D arrays of length 2n+1 over the basis
``{Z, X_1..X_n, Y_1..Y_n}``; linear maps are (2n+1)x(2n+1) arrays acting on
coordinate columns.  Arrays of dtype ``object`` holding ``Fraction`` entries
are supported everywhere the arithmetic is polynomial, which makes the group
law exact for rational input.

Brackets are those of right-invariant vector fields (the vector fields
generated by left translation), so in exponential coordinates

    e^u e^v = e^{u + v - 1/2 [u, v]}.

With this convention u -> u* (the generator of left translation) is a Lie
algebra homomorphism, which is what the metric construction in
:mod:`heislorentz.geometry` relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

__all__ = [
    "DimensionError",
    "Check",
    "WarpedPoint",
    "rank_of",
    "algebra_vector",
    "basis_vector",
    "basis",
    "bracket",
    "bch_multiply",
    "inverse",
    "bracket_form",
    "ad",
    "is_automorphism",
    "is_derivation",
    "warped_index",
    "to_warped",
    "from_warped",
    "ad_exp_tW",
    "conjugation",
    "warped_multiply",
    "warped_inverse",
    "biinvariant_gram",
    "biinvariant_inner",
]


class DimensionError(ValueError):
    """Raised when operands belong to Heisenberg algebras of different rank."""


@dataclass(frozen=True)
class Check:
    """Boolean outcome of a numerical check, with its residual and a reason."""

    ok: bool
    residual: float = 0.0
    reason: str = ""

    def __bool__(self) -> bool:
        return bool(self.ok)


def rank_of(v) -> int:
    """Heisenberg rank n of a vector of length 2n+1 (or a square map)."""
    dim = np.shape(v)[0]
    if dim < 3 or dim % 2 == 0:
        raise DimensionError(f"length {dim} is not 2n+1 for n >= 1")
    return (dim - 1) // 2


def _same_rank(u, v) -> int:
    n = rank_of(u)
    if rank_of(v) != n:
        raise DimensionError(f"rank mismatch: {n} vs {rank_of(v)}")
    return n


def algebra_vector(n: int, z=0.0, x: Sequence | None = None, y: Sequence | None = None) -> np.ndarray:
    """Build the coordinate array of z Z + sum x_i X_i + sum y_i Y_i."""
    if n < 1:
        raise DimensionError("rank must be positive")
    x = np.zeros(n) if x is None else np.asarray(x)
    y = np.zeros(n) if y is None else np.asarray(y)
    if x.shape != (n,) or y.shape != (n,):
        raise DimensionError(f"x and y must have length {n}")
    return np.concatenate([[z], x, y])


def basis_vector(n: int, name: str, exact: bool = False) -> np.ndarray:
    """Basis vector by name: ``"Z"``, ``"X1"``..``"Xn"``, ``"Y1"``..``"Yn"``."""
    dim = 2 * n + 1
    if exact:
        v = np.array([Fraction(0)] * dim, dtype=object)
        one = Fraction(1)
    else:
        v = np.zeros(dim)
        one = 1.0
    if name == "Z":
        v[0] = one
        return v
    kind, idx = name[0], int(name[1:])
    if kind not in "XY" or not 1 <= idx <= n:
        raise ValueError(f"unknown basis vector {name!r} for n={n}")
    v[idx if kind == "X" else n + idx] = one
    return v


def basis(n: int) -> dict[str, np.ndarray]:
    names = ["Z"] + [f"X{i}" for i in range(1, n + 1)] + [f"Y{i}" for i in range(1, n + 1)]
    return {name: basis_vector(n, name) for name in names}


def _half(v):
    return Fraction(1, 2) if np.asarray(v).dtype == object else 0.5


def bracket(u, v) -> np.ndarray:
    """[u, v] = sum_i (u.x_i v.y_i - u.y_i v.x_i) Z."""
    n = _same_rank(u, v)
    u = np.asarray(u)
    v = np.asarray(v)
    z = np.dot(u[1 : n + 1], v[n + 1 :]) - np.dot(u[n + 1 :], v[1 : n + 1])
    out = np.zeros(2 * n + 1, dtype=np.result_type(u, v))
    out[0] = z
    return out


def bch_multiply(u, v) -> np.ndarray:
    """Group law of H_n in exponential coordinates: u + v - 1/2 [u, v].

    Exact (no truncation): all double brackets vanish in h_n.
    """
    n = _same_rank(u, v)
    u = np.asarray(u)
    v = np.asarray(v)
    out = u + v
    # only the Z-coordinate of the bracket is nonzero
    out[0] = out[0] - _half(u) * (np.dot(u[1 : n + 1], v[n + 1 :]) - np.dot(u[n + 1 :], v[1 : n + 1]))
    return out


def inverse(u) -> np.ndarray:
    return -np.asarray(u)


def bracket_form(n: int) -> np.ndarray:
    """Antisymmetric matrix B with [u, v] = (u^T B v) Z."""
    B = np.zeros((2 * n + 1, 2 * n + 1))
    for i in range(1, n + 1):
        B[i, n + i] = 1.0
        B[n + i, i] = -1.0
    return B


def ad(u) -> np.ndarray:
    """Matrix of v -> [u, v]."""
    n = rank_of(u)
    m = np.zeros((2 * n + 1, 2 * n + 1))
    m[0, :] = np.asarray(u, dtype=float) @ bracket_form(n)
    return m


def _check_square(m) -> int:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square map, got shape {m.shape}")
    return rank_of(m)


def is_automorphism(m, tol: float = 1e-9) -> Check:
    """Whether m preserves brackets on all basis pairs (and is invertible)."""
    n = _check_square(m)
    m = np.asarray(m, dtype=float)
    det = np.linalg.det(m)
    if abs(det) <= tol:
        return Check(False, float("inf"), f"singular map (det={det:.3g})")
    B = bracket_form(n)
    # m[e_i, e_j] = B_ij m(Z);  [m e_i, m e_j] = (m^T B m)_ij Z
    lhs = B[:, :, None] * m[:, 0][None, None, :]
    rhs = np.zeros_like(lhs)
    rhs[:, :, 0] = m.T @ B @ m
    res = float(np.max(np.abs(lhs - rhs)))
    if res > tol:
        return Check(False, res, "bracket not preserved")
    return Check(True, res)


def is_derivation(m, tol: float = 1e-9) -> Check:
    """Leibniz rule m[u, v] = [m u, v] + [u, m v] on all basis pairs."""
    n = _check_square(m)
    m = np.asarray(m, dtype=float)
    B = bracket_form(n)
    lhs = B[:, :, None] * m[:, 0][None, None, :]
    rhs = np.zeros_like(lhs)
    rhs[:, :, 0] = m.T @ B + B @ m
    res = float(np.max(np.abs(lhs - rhs)))
    return Check(res <= tol, res, "" if res <= tol else "Leibniz rule fails")


# --- warped algebras s_lambda -------------------------------------------------


def warped_index(n: int) -> np.ndarray:
    """Positions of the h-basis {Z, X_1..X_n, Y_1..Y_n} inside {Z, X_1, Y_1, ..., X_n, Y_n, W}."""
    idx = np.zeros(2 * n + 1, dtype=int)
    for i in range(1, n + 1):
        idx[i] = 2 * i - 1
        idx[n + i] = 2 * i
    return idx


def to_warped(h, w=0.0) -> np.ndarray:
    n = rank_of(h)
    out = np.zeros(2 * n + 2)
    out[warped_index(n)] = h
    out[-1] = w
    return out


def from_warped(s) -> tuple[np.ndarray, float]:
    s = np.asarray(s, dtype=float)
    n = (len(s) - 2) // 2
    return s[warped_index(n)], float(s[-1])


def _lambda_array(lam) -> np.ndarray:
    return np.array([float(Fraction(x)) for x in lam])


def ad_exp_tW(t: float, lam) -> np.ndarray:
    """Ad(e^{tW}) on s_lambda in the basis {Z, X_1, Y_1, ..., X_n, Y_n, W}.

    Block rotation by lambda_i t on each span{X_i, Y_i}; Z and W are fixed.
    """
    lam = _lambda_array(lam)
    n = len(lam)
    m = np.eye(2 * n + 2)
    for i, li in enumerate(lam):
        c, s = np.cos(li * t), np.sin(li * t)
        j = 2 * i + 1
        m[j : j + 2, j : j + 2] = [[c, -s], [s, c]]
    return m


def conjugation(s: float, lam) -> np.ndarray:
    """The automorphism C_s of h (h-basis order) with derivative ad_exp_tW(s).

    In the right-invariant convention this is h -> e^{-sW} h e^{sW}.
    """
    n = len(lam)
    idx = warped_index(n)
    return ad_exp_tW(s, lam)[np.ix_(idx, idx)]


@dataclass(frozen=True)
class WarpedPoint:
    """The element e^{tW} e^h of the warped group, stored as the pair (t, h)."""

    t: float
    h: np.ndarray


def warped_multiply(p: WarpedPoint, q: WarpedPoint, lam) -> WarpedPoint:
    """(t1, h1)(t2, h2) = (t1 + t2, C_{t2}(h1) h2)."""
    _same_rank(p.h, q.h)
    if len(lam) != rank_of(p.h):
        raise DimensionError("lambda length differs from the rank")
    moved = conjugation(q.t, lam) @ np.asarray(p.h, dtype=float)
    return WarpedPoint(p.t + q.t, bch_multiply(moved, q.h))


def warped_inverse(p: WarpedPoint, lam) -> WarpedPoint:
    return WarpedPoint(-p.t, -(conjugation(-p.t, lam) @ np.asarray(p.h, dtype=float)))


def biinvariant_gram(n: int) -> np.ndarray:
    """Gram matrix of the bi-invariant Lorentz form on s_lambda.

    X_i, Y_i orthonormal; Z, W isotropic, orthogonal to them, <W, Z> = 1.
    """
    G = np.zeros((2 * n + 2, 2 * n + 2))
    G[1:-1, 1:-1] = np.eye(2 * n)
    G[0, -1] = G[-1, 0] = 1.0
    return G


def biinvariant_inner(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or len(u) % 2:
        raise DimensionError("warped vectors must share an even length 2n+2")
    return float(u @ biinvariant_gram(len(u) // 2 - 1) @ v)
