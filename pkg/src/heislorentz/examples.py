"""Ready-made constructions: the homogeneous path, Adams' deformation and the
infinite-monodromy example."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from ._numerics import expm_small
from .geometry import SpacetimePoint, act, chart_jacobian, metric_at
from .lie_core import (
    biinvariant_gram,
    bracket,
    conjugation,
    warped_index,
    warped_multiply,
    WarpedPoint,
)
from .paths import AutomorphismPath
from .quotient import LatticeSpec, lattice_closure_check, lattice_preserved, standard_lattice
from .symplectic import DefinitenessVerdict, definiteness, omega0, standard_splitting


def _rotation_blocks(n: int, angles: Sequence[float]) -> np.ndarray:
    m = np.eye(2 * n + 1)
    for i, a in enumerate(angles, start=1):
        c, s = math.cos(a), math.sin(a)
        m[i, i], m[i, n + i] = c, -s
        m[n + i, i], m[n + i, n + i] = s, c
    return m


def _rotation_derivative(n: int, angles: Sequence[float], rates: Sequence[float]) -> np.ndarray:
    m = np.zeros((2 * n + 1, 2 * n + 1))
    for i, (a, r) in enumerate(zip(angles, rates), start=1):
        c, s = math.cos(a), math.sin(a)
        m[i, i], m[i, n + i] = -r * s, -r * c
        m[n + i, i], m[n + i, n + i] = r * c, -r * s
    return m


def j_blocks(n: int, scale: Sequence[float] | float = 1.0) -> np.ndarray:
    """Derivation acting by scale_i [[0, -1], [1, 0]] on each span{X_i, Y_i}."""
    scale = np.broadcast_to(np.asarray(scale, dtype=float), (n,))
    return _rotation_derivative(n, [0.0] * n, scale)


def homogeneous_path(n: int, lam: Optional[Sequence] = None) -> AutomorphismPath:
    """phi_t = C_t, block rotation by lambda_i t; nu_t = lambda-scaled J blocks."""
    lam = [Fraction(1)] * n if lam is None else [Fraction(x) for x in lam]
    if len(lam) != n:
        raise ValueError("lambda must have n entries")
    lf = [float(x) for x in lam]
    N = math.lcm(*(x.denominator for x in lam))
    return AutomorphismPath(
        n=n,
        evaluator=lambda t: _rotation_blocks(n, [l * t for l in lf]),
        derivative=lambda t: _rotation_derivative(n, [l * t for l in lf], lf),
        period=2 * math.pi * N,
        kind="homogeneous",
        meta={"lambda": [str(x) for x in lam]},
    )


# --- Adams' deformation -----------------------------------------------------------


@dataclass(frozen=True)
class AdamsSpec:
    """Raised-cosine bump m(t) = floor + amplitude * (1 + cos(pi d / width)) / 2 for
    |d| < width, d the signed angular distance from ``center``; m = floor elsewhere."""

    n: int = 1
    center: float = 0.0
    width: float = 1.0
    floor: float = 1.0
    amplitude: float = 0.5
    quad_tol: float = 1e-10

    def __post_init__(self):
        if self.floor <= 0 or self.amplitude < 0:
            raise ValueError("bump must stay positive: floor > 0 and amplitude >= 0")
        if not 0 < self.width <= math.pi:
            raise ValueError("width must lie in (0, pi]")

    def m(self, t: float) -> float:
        d = (t - self.center + math.pi) % (2 * math.pi) - math.pi
        if abs(d) < self.width:
            return self.floor + 0.5 * self.amplitude * (1 + math.cos(math.pi * d / self.width))
        return self.floor

    def breakpoints(self) -> list:
        pts = []
        for p in (self.center - self.width, self.center + self.width):
            pts.append(p % (2 * math.pi))
        return sorted(pts)


class AdamsModel:
    """H(t) = int_0^t m, its inverse, and alpha = H(2 pi)."""

    def __init__(self, spec: AdamsSpec):
        self.spec = spec
        self._bps = spec.breakpoints()
        self.alpha = self._H0(2 * math.pi)
        self.H_inverse = lru_cache(maxsize=8192)(self._H_inverse)

    def _H0(self, r: float) -> float:
        """Integral over [0, r] for 0 <= r <= 2 pi."""
        if r == 0.0:
            return 0.0
        pts = [p for p in self._bps if 0.0 < p < r]
        tol = self.spec.quad_tol * 1e-3
        val, err = quad(self.spec.m, 0.0, r, points=pts or None, epsabs=tol, epsrel=tol, limit=200)
        if err > self.spec.quad_tol:
            raise ArithmeticError(f"quadrature error estimate {err:.3g} exceeds tolerance")
        return val

    def H(self, t: float) -> float:
        k = math.floor(t / (2 * math.pi))
        return k * self.alpha + self._H0(t - 2 * math.pi * k)

    def _H_inverse(self, tau: float) -> float:
        k = math.floor(tau / self.alpha)
        r = tau - k * self.alpha
        lo, hi = 0.0, 2 * math.pi
        s = r / self.alpha * 2 * math.pi
        # safeguarded Newton: H0 is increasing with H0' = m >= floor > 0
        for _ in range(100):
            f = self._H0(s) - r
            if f > 0:
                hi = s
            else:
                lo = s
            step = f / self.spec.m(s)
            cand = s - step
            if not lo < cand < hi:
                cand = 0.5 * (lo + hi)
            if abs(cand - s) <= 1e-15 * max(1.0, abs(s)):
                s = cand
                break
            s = cand
        return 2 * math.pi * k + s


class AdamsPath(NamedTuple):
    path: AutomorphismPath
    alpha: float
    model: AdamsModel


def adams_path(spec: AdamsSpec) -> AdamsPath:
    """phi_{H(t)} = C_t, exposed in the H-parameter; nu_{H(t)} = J / m(t)."""
    model = AdamsModel(spec)
    n = spec.n

    def evaluator(tau):
        t = model.H_inverse(float(tau))
        return _rotation_blocks(n, [t] * n)

    def derivative(tau):
        t = model.H_inverse(float(tau))
        rate = 1.0 / spec.m(t)
        return _rotation_derivative(n, [t] * n, [rate] * n)

    path = AutomorphismPath(
        n=n,
        evaluator=evaluator,
        derivative=derivative,
        period=model.alpha,
        kind="adams",
        meta={"adams": model},
    )
    return AdamsPath(path, model.alpha, model)


def _warped_metric(spec: AdamsSpec, x: SpacetimePoint) -> np.ndarray:
    """m * theta on chart coordinates (t, h) of S~ = R x| H, via right trivialization.

    The chart vector (dt, dv) at (t, g) is d/de of exp(e xi).(t, g) with
    xi = dt W + C_t^{-1}(dv + 1/2 [dv, g]).
    """
    n = spec.n
    lam = [1] * n
    Ct_inv = conjugation(-x.t, lam)
    g = np.asarray(x.g, dtype=float)
    T = np.zeros((2 * n + 2, 2 * n + 2))  # chart -> s coordinates {Z, X1, Y1, ..., W}
    T[-1, 0] = 1.0
    idx = warped_index(n)
    for j, e in enumerate(np.eye(2 * n + 1)):
        k = Ct_inv @ (e + 0.5 * bracket(e, g))
        T[idx, j + 1] = k
    return spec.m(x.t) * T.T @ biinvariant_gram(n) @ T


@dataclass(frozen=True)
class AdamsCrossCheck:
    ok: bool
    max_residual: float
    equivariance_residual: float
    samples: int


def adams_cross_check(spec: AdamsSpec, samples: int = 200, tol: float = 1e-6, seed: int = 0, bundle: Optional[AdamsPath] = None) -> AdamsCrossCheck:
    """F(e^{tW}, h) = (H(t), h) carries m * theta to the constructed metric."""
    bundle = bundle or adams_path(spec)
    path, model = bundle.path, bundle.model
    s = standard_splitting(spec.n)
    rng = np.random.default_rng(seed)
    n = spec.n

    def F(x):
        return SpacetimePoint(model.H(x.t), np.asarray(x.g, dtype=float))

    worst = 0.0
    for _ in range(samples):
        x = SpacetimePoint(float(rng.uniform(-2 * math.pi, 4 * math.pi)), rng.uniform(-1, 1, 2 * n + 1))
        J = chart_jacobian(F, x, 1e-6)
        rho = metric_at(path, s, F(x)).coord_form
        worst = max(worst, float(np.max(np.abs(J.T @ rho @ J - _warped_metric(spec, x)))))

    eq = 0.0
    lam = [1] * n
    for _ in range(min(samples, 100)):
        t = float(rng.uniform(-2 * math.pi, 4 * math.pi))
        g = rng.uniform(-1, 1, 2 * n + 1)
        h = rng.uniform(-1, 1, 2 * n + 1)
        left = warped_multiply(WarpedPoint(0.0, h), WarpedPoint(t, g), lam)
        lhs = F(SpacetimePoint(left.t, left.h))
        rhs = act(h, path, F(SpacetimePoint(t, g)))
        eq = max(eq, abs(lhs.t - rhs.t), float(np.max(np.abs(lhs.g - rhs.g))))
    return AdamsCrossCheck(worst <= tol and eq <= tol, worst, eq, samples)


# --- infinite monodromy -------------------------------------------------------------


@dataclass(frozen=True)
class MonodromySpec:
    n: int = 1
    a_block: np.ndarray = field(default_factory=lambda: np.array([[2, 1], [1, 1]]))
    b_block: np.ndarray = field(
        default_factory=lambda: np.array([[1.0, 1.0], [(-1 + math.sqrt(5)) / 2, (-1 - math.sqrt(5)) / 2]])
    )

    @property
    def eigenvalues(self) -> tuple:
        return ((3 + math.sqrt(5)) / 2, (3 - math.sqrt(5)) / 2)

    @property
    def V_block(self) -> np.ndarray:
        b = self.b_block
        logs = np.diag([math.log(ev) for ev in self.eigenvalues])
        return b @ logs @ np.linalg.inv(b)


def _embed_blocks(n: int, block: np.ndarray, center=1.0, dtype=float) -> np.ndarray:
    m = np.zeros((2 * n + 1, 2 * n + 1), dtype=dtype)
    m[0, 0] = center
    for i in range(1, n + 1):
        m[i, i], m[i, n + i] = block[0, 0], block[0, 1]
        m[n + i, i], m[n + i, n + i] = block[1, 0], block[1, 1]
    return m


def _int_power(block: np.ndarray, q: int) -> np.ndarray:
    """Exact integer power of a unimodular 2x2 integer block."""
    a = [[int(v) for v in r] for r in block]
    if q < 0:
        det = a[0][0] * a[1][1] - a[0][1] * a[1][0]
        a = [[a[1][1] * det, -a[0][1] * det], [-a[1][0] * det, a[0][0] * det]]
        q = -q
    out = [[1, 0], [0, 1]]
    for _ in range(q):
        out = [[sum(out[i][k] * a[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
    return np.array(out, dtype=object)


def monodromy_path(spec: MonodromySpec) -> AutomorphismPath:
    """phi_t = exp(t V), V acting blockwise and killing Z."""
    n = spec.n
    V = spec.V_block
    Vfull = _embed_blocks(n, V, center=0.0)

    def evaluator(t):
        return _embed_blocks(n, expm_small(t * V))

    return AutomorphismPath(
        n=n,
        evaluator=evaluator,
        derivative=lambda t: Vfull @ evaluator(t),
        period=1.0,
        kind="monodromy",
        meta={"integer_power": lambda q: _embed_blocks(n, _int_power(spec.a_block, q), center=1, dtype=object)},
    )


@dataclass
class MonodromyBundle:
    path: AutomorphismPath
    lattice: LatticeSpec
    report: dict


def monodromy_bundle(n: int = 1, qmax: int = 5) -> MonodromyBundle:
    spec = MonodromySpec(n=n)
    path = monodromy_path(spec)
    L = standard_lattice(n, half_center=True)
    a = spec.a_block.astype(float)
    b = spec.b_block
    V = spec.V_block
    conj = np.linalg.inv(b) @ a @ b
    s = standard_splitting(n)
    verdict: DefinitenessVerdict = definiteness(_embed_blocks(n, V, center=0.0), s)
    # X -> w0(X, V X) vanishes on the real eigenvectors of V
    ev, vecs = np.linalg.eig(V)
    null_residual = 0.0
    for k in range(2):
        e = np.real(vecs[:, k])
        X = np.zeros(2 * n + 1)
        X[1], X[n + 1] = e
        VX = _embed_blocks(n, V, center=0.0) @ X
        null_residual = max(null_residual, abs(omega0(s, X, VX)))
    closure = lattice_closure_check(L)
    preserved = {
        q: bool(lattice_preserved(_embed_blocks(n, _int_power(spec.a_block, q), center=1, dtype=object), L))
        for q in range(-qmax, qmax + 1)
    }
    report = {
        "exp_error": float(np.max(np.abs(expm_small(V) - a))),
        "exp_path_error": float(np.max(np.abs(path.phi(1.0) - _embed_blocks(n, a)))),
        "det_a": int(round(np.linalg.det(a))),
        "conjugate_offdiag": float(max(abs(conj[0, 1]), abs(conj[1, 0]))),
        "conjugate_diag": [float(conj[0, 0]), float(conj[1, 1])],
        "closure": bool(closure),
        "preserved": preserved,
        "definiteness": verdict,
        "eigenvector_null_residual": null_residual,
        "paper_conflict": not verdict.definite,
    }
    return MonodromyBundle(path, L, report)
