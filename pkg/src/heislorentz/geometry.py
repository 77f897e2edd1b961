"""The H-space R *_Phi H: action, Killing fields, metric and isometry checks.

Points are charted as (t, g) with g in exponential coordinates, so tangent
vectors are arrays (dt, dv) of length 2n+2.  The metric is prescribed on the
frame (W, Z0*, p_1*, ..., p_2n*), where W = d/dt and K* is the Killing field
of K in h:

    <W, W> = 0,  <W, Z0*> = 1,  W _|_ p*,  Z0* isotropic and _|_ p*,
    <X*, Y*> = w0(nu_t^{-1} X, Y)   for X, Y in p.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from ._numerics import derivative_with_fallback, sweep
from .lie_core import ad, bch_multiply, bracket
from .paths import AutomorphismPath, nu_at
from .symplectic import ComplementError, Splitting, restrict

SIGNATURE_THRESHOLD = 1e-10


class MetricError(ValueError):
    """The metric cannot be assembled (singular nu, bad frame, not Lorentz)."""


class DegenerateMetricError(MetricError):
    pass


class RigidityError(ValueError):
    pass


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    g: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.t], np.asarray(self.g, dtype=float)])

    @classmethod
    def from_array(cls, a) -> "SpacetimePoint":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), a[1:].copy())


@dataclass(frozen=True)
class Tangent:
    dt: float
    dv: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.dt], np.asarray(self.dv, dtype=float)])

    @classmethod
    def from_array(cls, a) -> "Tangent":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), a[1:].copy())


def _vec(u) -> np.ndarray:
    return u.as_array() if hasattr(u, "as_array") else np.asarray(u, dtype=float)


def act(h, path: AutomorphismPath, x: SpacetimePoint) -> SpacetimePoint:
    """h.(t, g) = (t, Phi_t(h) g)."""
    return SpacetimePoint(x.t, bch_multiply(path.phi(x.t) @ np.asarray(h, dtype=float), x.g))


def _killing_chart(phiK: np.ndarray, g: np.ndarray) -> np.ndarray:
    return phiK - 0.5 * bracket(phiK, g)


def killing_field(K, path: AutomorphismPath, x: SpacetimePoint) -> Tangent:
    """f_x(K) = d/ds e^{sK}.x at s=0, in closed form."""
    return Tangent(0.0, _killing_chart(path.phi(x.t) @ np.asarray(K, dtype=float), np.asarray(x.g, dtype=float)))


def frame_matrix(path: AutomorphismPath, s: Splitting, x: SpacetimePoint) -> np.ndarray:
    """Columns W, Z0*, p_1*, ..., p_2n* in chart coordinates."""
    n = path.n
    phi = path.phi(x.t)
    g = np.asarray(x.g, dtype=float)
    F = np.zeros((2 * n + 2, 2 * n + 2))
    F[0, 0] = 1.0
    for j, v in enumerate([s.z0, *s.p_basis]):
        F[1:, j + 1] = _killing_chart(phi @ v, g)
    return F


def p_block(path: AutomorphismPath, s: Splitting, t: float) -> np.ndarray:
    """Gram matrix <p_i*, p_j*> = w0(nu_t^{-1} p_i, p_j)."""
    try:
        nu = restrict(nu_at(path, t), s)
    except ComplementError as e:
        raise MetricError(f"derivation at t={t:g} does not preserve p") from e
    if abs(np.linalg.det(nu)) < 1e-14:
        raise MetricError(f"nu_t is singular at t={t:g}")
    return np.linalg.inv(nu).T @ s.omega


def frame_gram(path: AutomorphismPath, s: Splitting, t: float, strict: bool = True) -> np.ndarray:
    n = path.n
    G = np.zeros((2 * n + 2, 2 * n + 2))
    G[0, 1] = G[1, 0] = 1.0
    B = p_block(path, s, t)
    if strict:
        asym = float(np.max(np.abs(B - B.T)))
        if asym > 1e-8:
            raise MetricError(f"p-block is not symmetric (defect {asym:.3g}); nu_t is not infinitesimally symplectic")
        if np.linalg.eigvalsh(0.5 * (B + B.T))[0] <= 0:
            raise MetricError(f"p-block is not positive definite at t={t:g}")
    G[2:, 2:] = B
    return G


@dataclass(frozen=True)
class MetricSample:
    base: SpacetimePoint
    frame: np.ndarray  # columns W, Z0*, p_j*
    gram: np.ndarray
    coord_form: np.ndarray

    @property
    def frame_tangents(self) -> list:
        return [Tangent.from_array(c) for c in self.frame.T]

    def to_dict(self) -> dict:
        return {
            "base": {"t": self.base.t, "g": np.asarray(self.base.g, dtype=float).tolist()},
            "gram": self.gram.tolist(),
            "coord_form": self.coord_form.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def metric_at(path: AutomorphismPath, s: Splitting, x: SpacetimePoint, strict: bool = True) -> MetricSample:
    F = frame_matrix(path, s, x)
    if np.linalg.cond(F) > 1e12:
        raise MetricError("frame is numerically degenerate")
    G = frame_gram(path, s, x.t, strict=strict)
    Finv = np.linalg.inv(F)
    return MetricSample(x, F, G, Finv.T @ G @ Finv)


def coord_metric(path: AutomorphismPath, s: Splitting, x) -> np.ndarray:
    """The metric on chart coordinates at x (a SpacetimePoint or chart array)."""
    if not isinstance(x, SpacetimePoint):
        x = SpacetimePoint.from_array(x)
    return metric_at(path, s, x).coord_form


class Signature(NamedTuple):
    timelike: int
    spacelike: int


def signature_of(ms, threshold: float = SIGNATURE_THRESHOLD) -> Signature:
    """(timelike, spacelike) = (#negative, #positive) eigenvalues of the Gram matrix."""
    G = ms.gram if isinstance(ms, MetricSample) else np.asarray(ms, dtype=float)
    ev = np.linalg.eigvalsh(0.5 * (G + G.T))
    if np.any(np.abs(ev) <= threshold):
        raise DegenerateMetricError(f"near-zero eigenvalue {ev[np.argmin(np.abs(ev))]:.3g}")
    return Signature(int(np.sum(ev < 0)), int(np.sum(ev > 0)))


# --- Killing equation -------------------------------------------------------------


def _flow_and_differential(path: AutomorphismPath, K, x: np.ndarray, s: float):
    """The flow x -> e^{sK}.x and its exact chart differential."""
    t, g = x[0], x[1:]
    phiK = path.phi(t) @ K
    dphiK = path.dphi(t) @ K
    y = np.concatenate([[t], bch_multiply(s * phiK, g)])
    D = np.eye(len(x))
    D[1:, 0] = s * dphiK - 0.5 * s * bracket(dphiK, g)
    D[1:, 1:] -= 0.5 * s * ad(phiK)
    return y, D


def lie_derivative_matrix(
    path: AutomorphismPath, s: Splitting, K, x: SpacetimePoint, step: float = 1e-5
) -> np.ndarray:
    """(L_{K*} g)_x on chart coordinates, by a central difference in the flow parameter."""
    K = np.asarray(K, dtype=float)
    xa = x.as_array()

    def pulled(r):
        y, D = _flow_and_differential(path, K, xa, r)
        return D.T @ coord_metric(path, s, y) @ D

    return derivative_with_fallback(pulled, 0.0, step)


def killing_residual(
    path: AutomorphismPath, s: Splitting, K, x: SpacetimePoint, U, V, step: float = 1e-5
) -> float:
    """|d/ds g_{e^{sK}x}(De^{sK} U, De^{sK} V)| at s = 0."""
    K = np.asarray(K, dtype=float)
    xa = x.as_array()
    u, v = _vec(U), _vec(V)

    def pulled(r):
        y, D = _flow_and_differential(path, K, xa, r)
        return float((D @ u) @ coord_metric(path, s, y) @ (D @ v))

    return float(abs(derivative_with_fallback(pulled, 0.0, step)))


@dataclass(frozen=True)
class BracketComparison:
    finite_difference: Tangent
    analytic: Tangent
    difference: float


def bracket_with_W(path: AutomorphismPath, K, x: SpacetimePoint, step: float = 1e-5) -> BracketComparison:
    """[K*, W] by differencing K* along t, against -(phi_t^{-1} dphi_t K)*."""
    K = np.asarray(K, dtype=float)
    g = np.asarray(x.g, dtype=float)
    dK = derivative_with_fallback(lambda t: _killing_chart(path.phi(t) @ K, g), x.t, step)
    fd = Tangent(0.0, -dK)
    an = killing_field(nu_at(path, x.t) @ K, path, x)
    an = Tangent(0.0, -an.dv)
    return BracketComparison(fd, an, float(np.linalg.norm(fd.dv - an.dv)))


def lie_bracket_fd(
    X: Callable[[np.ndarray], np.ndarray], Y: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float = 1e-5
) -> np.ndarray:
    """[X, Y] = DY.X - DX.Y for vector fields on chart coordinates."""
    x = np.asarray(x, dtype=float)
    d = len(x)
    DX = np.column_stack([(X(x + step * e) - X(x - step * e)) / (2 * step) for e in np.eye(d)])
    DY = np.column_stack([(Y(x + step * e) - Y(x - step * e)) / (2 * step) for e in np.eye(d)])
    return DY @ X(x) - DX @ Y(x)


# --- isometries -------------------------------------------------------------------


def chart_jacobian(fmap: Callable[[SpacetimePoint], SpacetimePoint], x: SpacetimePoint, step: float = 1e-6) -> np.ndarray:
    xa = x.as_array()
    cols = []
    for i, e in enumerate(np.eye(len(xa))):
        hi, lo = xa + step * e, xa - step * e
        plus = fmap(SpacetimePoint.from_array(hi)).as_array()
        minus = fmap(SpacetimePoint.from_array(lo)).as_array()
        # divide by the step actually represented, not the nominal one
        cols.append((plus - minus) / (hi[i] - lo[i]))
    return np.column_stack(cols)


@dataclass(frozen=True)
class IsometryReport:
    ok: bool
    max_residual: float
    residuals: list
    failures: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def verify_map_isometry(
    fmap: Callable[[SpacetimePoint], SpacetimePoint],
    src: tuple,
    dst: tuple,
    samples: Sequence[SpacetimePoint],
    tol: float = 1e-6,
    step: float = 1e-6,
) -> IsometryReport:
    """max over samples of |D f^T g'_{f(x)} D f - g_x| (all tangent pairs at once)."""
    path, s = src
    path2, s2 = dst

    def one(x):
        try:
            J = chart_jacobian(fmap, x, step)
            if np.linalg.cond(J) > 1e10:
                return float("inf"), "ill-conditioned differential"
            y = fmap(x)
            diff = J.T @ metric_at(path2, s2, y).coord_form @ J - metric_at(path, s, x).coord_form
            return float(np.max(np.abs(diff))), ""
        except MetricError as e:
            return float("inf"), str(e)

    results = sweep(one, list(samples))
    residuals = [r for r, _ in results]
    failures = [(i, msg) for i, (_, msg) in enumerate(results) if msg]
    worst = max(residuals) if residuals else 0.0
    return IsometryReport(worst <= tol and not failures, worst, residuals, failures)


# --- linear rigidity ---------------------------------------------------------------


@dataclass(frozen=True)
class RigidityProblem:
    """A Lorentz Gram matrix and a lightlike subspace U (one basis vector per row)."""

    gram: np.ndarray
    u_basis: np.ndarray
    kernel_tol: float = 1e-9

    def __post_init__(self):
        G = np.asarray(self.gram, dtype=float)
        U = np.atleast_2d(np.asarray(self.u_basis, dtype=float))
        if G.shape[0] != G.shape[1] or np.max(np.abs(G - G.T)) > 1e-12:
            raise RigidityError("gram must be square and symmetric")
        ev = np.linalg.eigvalsh(G)
        if np.sum(ev < 0) != 1 or np.any(np.abs(ev) <= self.kernel_tol):
            raise RigidityError("gram is not a Lorentz form")
        if U.shape[1] != G.shape[0] or np.linalg.matrix_rank(U) != U.shape[0]:
            raise RigidityError("u_basis must be independent vectors of the right length")
        object.__setattr__(self, "gram", G)
        object.__setattr__(self, "u_basis", U)

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    def restricted(self) -> np.ndarray:
        return self.u_basis @ self.gram @ self.u_basis.T

    def kernel_dimension(self) -> int:
        ev = np.linalg.eigvalsh(self.restricted())
        scale = max(1.0, float(np.max(np.abs(ev))))
        return int(np.sum(np.abs(ev) <= self.kernel_tol * scale))

    def kernel_vector(self) -> np.ndarray:
        ev, vecs = np.linalg.eigh(self.restricted())
        c = vecs[:, np.argmin(np.abs(ev))]
        return c @ self.u_basis


def lightlike_transverse(p: RigidityProblem) -> np.ndarray:
    """The isotropic W with <W, Z> = 1 orthogonal to the spacelike part of U."""
    k = p.u_basis.shape[0]
    if k != p.dim - 1:
        raise RigidityError("U must have codimension one")
    if p.kernel_dimension() != 1:
        raise RigidityError("U is not lightlike (kernel dimension != 1)")
    G = p.gram
    ev, vecs = np.linalg.eigh(p.restricted())
    zc = vecs[:, np.argmin(np.abs(ev))]
    Z = zc @ p.u_basis
    # spacelike part: coefficient directions orthogonal to the kernel direction
    _, _, vt = np.linalg.svd(zc[None, :])
    X = vt[1:] @ p.u_basis
    A = np.vstack([X @ G, Z @ G])
    rhs = np.zeros(k)
    rhs[-1] = 1.0
    if np.linalg.matrix_rank(A) != k:
        raise RigidityError("linear conditions on W are degenerate")
    W0 = np.linalg.lstsq(A, rhs, rcond=None)[0]
    # solutions of the linear part form W0 + s Z; <W, W> = <W0, W0> + 2 s
    return W0 - 0.5 * (W0 @ G @ W0) * Z


def rigidity_dimension(p: RigidityProblem, tol: float = 1e-9) -> int:
    """Dimension of {e : e u = 0 for u in U, e^T G + G e = 0}, the stabilizer algebra."""
    if p.kernel_dimension() != 1:
        raise RigidityError("U is not lightlike (kernel dimension != 1)")
    d = p.dim
    G = p.gram
    cols = []
    for a in range(d):
        for b in range(d):
            E = np.zeros((d, d))
            E[a, b] = 1.0
            cols.append(np.concatenate([(E @ p.u_basis.T).ravel(), (E.T @ G + G @ E).ravel()]))
    L = np.column_stack(cols)
    sv = np.linalg.svd(L, compute_uv=False)
    rank = int(np.sum(sv > tol * max(1.0, sv[0])))
    return d * d - rank


def random_rigidity_problem(dim: int, rng: np.random.Generator, codim: int = 1) -> RigidityProblem:
    """Random Lorentz form with a lightlike subspace of the given codimension."""
    if dim < 2 or codim < 1 or codim > dim - 1:
        raise RigidityError("invalid dimension/codimension")
    # P = Q1 diag(sv) Q2 keeps the instance well-conditioned (cond(G) <= 16)
    q1, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    q2, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    P = q1 @ np.diag(rng.uniform(0.5, 2.0, dim)) @ q2
    eta = np.diag([-1.0] + [1.0] * (dim - 1))
    G = P.T @ eta @ P
    G = 0.5 * (G + G.T)
    Pinv = np.linalg.inv(P)
    spatial = rng.normal(size=dim - 1)
    spatial /= np.linalg.norm(spatial)
    null = Pinv @ np.concatenate([[1.0], spatial])
    null /= np.linalg.norm(null)
    # n^perp contains n; complete n by (dim - 1 - codim) orthonormal vectors of n^perp
    perp = _null_space(null @ G)
    perp = perp - np.outer(null, null @ perp)
    q, _ = np.linalg.qr(perp @ rng.normal(size=(perp.shape[1], perp.shape[1])))
    others = q[:, : dim - 1 - codim]
    U = np.column_stack([null, others]).T
    k = U.shape[0]
    m1, _ = np.linalg.qr(rng.normal(size=(k, k)))
    m2, _ = np.linalg.qr(rng.normal(size=(k, k)))
    return RigidityProblem(G, m1 @ np.diag(rng.uniform(0.5, 2.0, k)) @ m2 @ U)


def _null_space(row: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(np.atleast_2d(row))
    return vt[1:].T
