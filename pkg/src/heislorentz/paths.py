"""Paths t -> phi_t in Aut(h): validation, Z-equivariance and equivalences."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import expm

from ._numerics import sweep
from .lie_core import Check, bch_multiply, bracket, is_automorphism
from .symplectic import (
    ComplementChange,
    ComplementError,
    DefinitenessVerdict,
    Splitting,
    canonical_iso,
    definiteness,
    in_M_p,
    restrict,
)

PATH_KINDS = ("homogeneous", "adams", "monodromy", "one_parameter", "custom")
EQUIVARIANT_KINDS = ("homogeneous", "adams", "monodromy", "one_parameter")


class PathError(ValueError):
    pass


def _unit_z(n: int) -> np.ndarray:
    z = np.zeros(2 * n + 1)
    z[0] = 1.0
    return z


@dataclass(frozen=True, eq=False)
class AutomorphismPath:
    """A path t -> phi_t of automorphisms of h_n with derivative access.

    ``z0`` is the central generator the metric is built from; ``period`` is
    the equivariance unit alpha.
    """

    n: int
    evaluator: Callable[[float], np.ndarray]
    derivative: Optional[Callable[[float], np.ndarray]] = None
    period: float = 1.0
    kind: str = "custom"
    z0: Optional[np.ndarray] = None
    fd_step: float = 1e-5
    check_identity: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PATH_KINDS:
            raise PathError(f"unknown path kind {self.kind!r}")
        if self.period <= 0:
            raise PathError("period must be positive")
        if self.z0 is None:
            object.__setattr__(self, "z0", _unit_z(self.n))
        if self.check_identity:
            err = np.max(np.abs(self.phi(0.0) - np.eye(2 * self.n + 1)))
            if err > 1e-12:
                raise PathError(f"phi_0 differs from the identity by {err:.3g}")

    def phi(self, t: float) -> np.ndarray:
        return np.asarray(self.evaluator(float(t)), dtype=float)

    def dphi(self, t: float) -> np.ndarray:
        if self.derivative is not None:
            return np.asarray(self.derivative(float(t)), dtype=float)
        h = self.fd_step
        if h <= 0 or t + h == t:
            raise PathError(f"finite-difference step {h:g} underflows at t={t:g}")
        return (self.phi(t + h) - self.phi(t - h)) / (2 * h)

    def without_derivative(self, step: float = 1e-5) -> "AutomorphismPath":
        return replace(self, derivative=None, fd_step=step, check_identity=False)


def nu_at(path: AutomorphismPath, t: float) -> np.ndarray:
    """The derivation candidate phi_t^{-1} o (d phi_s/ds)_t; its p-block is nu_t."""
    try:
        return np.linalg.solve(path.phi(t), path.dphi(t))
    except np.linalg.LinAlgError as e:
        raise PathError(f"phi_t is singular at t={t:g}") from e


def infer_splitting(path: AutomorphismPath, t: float = 0.0, tol: float = 1e-8) -> Splitting:
    """Splitting whose complement is the image of the derivation at t.

    The returned basis is the graph basis X_j + c_j Z, Y_j + c'_j Z of the image.
    """
    n = path.n
    delta = nu_at(path, t)
    u, sv, _ = np.linalg.svd(delta)
    if sv[0] == 0 or np.sum(sv > tol * max(1.0, sv[0])) != 2 * n:
        raise PathError(f"derivation at t={t:g} does not have rank {2 * n}; supply a splitting")
    image = u[:, : 2 * n]
    xy = image[1:, :]
    if np.linalg.cond(xy) > 1e12:
        raise PathError("image of the derivation meets the center")
    P = (image @ np.linalg.inv(xy)).T
    return Splitting(path.z0, P)


@dataclass(frozen=True)
class SampleRecord:
    t: float
    automorphism_ok: bool
    derivation_ok: bool
    kills_z0: bool
    preserves_p: bool
    definiteness: Optional[DefinitenessVerdict]
    residual: float

    @property
    def ok(self) -> bool:
        return (
            self.automorphism_ok
            and self.derivation_ok
            and self.kills_z0
            and self.preserves_p
            and self.definiteness is not None
            and self.definiteness.definite
        )


@dataclass(frozen=True)
class PathValidationReport:
    grid: np.ndarray
    splitting_inferred: Optional[Splitting]
    samples: list
    overall: bool
    max_residual: float
    reason: str = ""


def default_grid(path: AutomorphismPath, samples: int = 256) -> np.ndarray:
    if path.kind in EQUIVARIANT_KINDS:
        return np.linspace(0.0, path.period, samples, endpoint=False)
    return np.linspace(-1.0, 2.0, samples)


def _sample(path: AutomorphismPath, s: Splitting, t: float, tol: float) -> SampleRecord:
    from .lie_core import is_derivation

    phi = path.phi(t)
    aut = is_automorphism(phi, tol)
    delta = nu_at(path, t)
    der = is_derivation(delta, tol)
    kz = float(np.linalg.norm(delta @ s.z0))
    try:
        restrict(delta, s, tol)
        pres = True
        verdict = definiteness(delta, s)
    except ComplementError:
        pres = False
        verdict = None
    res = max(aut.residual, der.residual, kz)
    return SampleRecord(float(t), bool(aut), bool(der), kz <= tol, pres, verdict, res)


def validate_metric_defining(
    path: AutomorphismPath,
    s: Optional[Splitting] = None,
    grid: Optional[Sequence[float]] = None,
    tol: float = 1e-9,
) -> PathValidationReport:
    """Check phi_t^{-1} dphi_t in M_p at every grid point."""
    grid = default_grid(path) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise PathError("grid must be non-empty")
    if s is None:
        try:
            s = infer_splitting(path, float(grid[0]))
        except PathError as e:
            return PathValidationReport(grid, None, [], False, float("inf"), str(e))
    samples = sweep(lambda t: _sample(path, s, t, tol), grid)
    overall = all(r.ok for r in samples)
    reason = ""
    if not overall:
        bad = next(r for r in samples if not r.ok)
        for flag, text in (
            (bad.automorphism_ok, "phi_t is not an automorphism"),
            (bad.derivation_ok, "not a derivation"),
            (bad.kills_z0, "does not kill z0"),
            (bad.preserves_p, "does not preserve p"),
        ):
            if not flag:
                reason = f"t={bad.t:.6g}: {text}"
                break
        else:
            reason = f"t={bad.t:.6g}: restriction to p is {bad.definiteness.verdict}"
    return PathValidationReport(grid, s, samples, overall, max(r.residual for r in samples), reason)


def check_Z_equivariance(
    path: AutomorphismPath, grid: Optional[Sequence[float]] = None, tol: float = 1e-8
) -> Check:
    """max over q in {-2,-1,1,2} and the grid of |phi_{q a + t} - phi_{q a} phi_t|."""
    grid = default_grid(path, 64) if grid is None else np.asarray(grid, dtype=float)
    a = path.period

    def worst(t):
        return max(
            float(np.max(np.abs(path.phi(q * a + t) - path.phi(q * a) @ path.phi(t)))) for q in (-2, -1, 1, 2)
        )

    res = max(sweep(worst, grid))
    return Check(res <= tol, res, "" if res <= tol else "phi is not period-equivariant")


def _nu_block(path: AutomorphismPath, s: Optional[Splitting], t: float) -> np.ndarray:
    delta = nu_at(path, t)
    if s is None:
        return delta
    try:
        return restrict(delta, s)
    except ComplementError:
        return delta


def check_nu_periodicity(
    path: AutomorphismPath, s: Optional[Splitting] = None, grid: Optional[Sequence[float]] = None, tol: float = 1e-8
) -> Check:
    grid = default_grid(path, 64) if grid is None else np.asarray(grid, dtype=float)
    a = path.period
    res = max(sweep(lambda t: float(np.max(np.abs(_nu_block(path, s, t + a) - _nu_block(path, s, t)))), grid))
    return Check(res <= tol, res, "" if res <= tol else "nu is not period-invariant")


# --- equivalences -------------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceWitness:
    c: float
    d: float = 0.0

    def __post_init__(self):
        if self.c == 0:
            raise ValueError("equivalence witness needs c != 0")

    def compose(self, inner: "EquivalenceWitness") -> "EquivalenceWitness":
        """Witness of rescaling by ``inner`` and then by ``self``."""
        return EquivalenceWitness(self.c * inner.c, self.c * inner.d + self.d)

    def inverse(self) -> "EquivalenceWitness":
        return EquivalenceWitness(1.0 / self.c, -self.d / self.c)


def _plain_meta(path: AutomorphismPath) -> dict:
    """Metadata safe to carry over to a derived path (exact integer powers are not)."""
    return {k: v for k, v in path.meta.items() if k != "integer_power"}


def rescale_path(path: AutomorphismPath, w: EquivalenceWitness) -> AutomorphismPath:
    """The path phi' with phi'_{ct+d} = phi_t, paired with the generator c z0."""
    c, d = float(w.c), float(w.d)

    def evaluator(tau):
        return path.phi((tau - d) / c)

    def derivative(tau):
        return path.dphi((tau - d) / c) / c

    return AutomorphismPath(
        n=path.n,
        evaluator=evaluator,
        derivative=derivative,
        period=abs(c) * path.period,
        kind=path.kind,
        z0=c * path.z0,
        fd_step=path.fd_step,
        check_identity=path.check_identity and d == 0.0,
        meta={**_plain_meta(path), "rescaled": (c, d)},
    )


def conjugate_path(path: AutomorphismPath, m: np.ndarray) -> AutomorphismPath:
    """phi'_t = m phi_t m^{-1}; its derivation is m delta_t m^{-1}."""
    m = np.asarray(m, dtype=float)
    minv = np.linalg.inv(m)
    return AutomorphismPath(
        n=path.n,
        evaluator=lambda t: m @ path.phi(t) @ minv,
        derivative=lambda t: m @ path.dphi(t) @ minv,
        period=path.period,
        kind="custom",
        z0=path.z0,
        fd_step=path.fd_step,
        meta={**_plain_meta(path), "conjugated": True},
    )


@dataclass(frozen=True, eq=False)
class EquivalenceMap:
    """theta(t, h) = (t, phi'_t phi_t^{-1}(h) e^{gamma(t)}) between the two spaces."""

    source_path: AutomorphismPath
    target_path: AutomorphismPath
    change: ComplementChange
    source_splitting: Splitting
    target_splitting: Splitting
    gamma_solutions: tuple
    t_span: tuple

    def gamma(self, t: float) -> np.ndarray:
        lo, hi = self.t_span
        if not lo <= t <= hi:
            raise PathError(f"t={t:g} outside the integrated span {self.t_span}")
        sol = self.gamma_solutions[1] if t >= 0 else self.gamma_solutions[0]
        if sol is None:
            return np.zeros(2 * self.source_path.n + 1)
        return sol.sol(t)

    def map_coords(self, t: float, h: np.ndarray) -> tuple[float, np.ndarray]:
        psi = self.target_path.phi(t) @ np.linalg.inv(self.source_path.phi(t))
        return t, bch_multiply(psi @ np.asarray(h, dtype=float), self.gamma(t))

    def __call__(self, x):
        t, g = self.map_coords(x.t, x.g)
        return type(x)(t, g)


def change_complement(
    path: AutomorphismPath,
    s: Splitting,
    s_prime: Splitting,
    t_span: tuple = (-8.0, 8.0),
    rtol: float = 1e-12,
    atol: float = 1e-13,
) -> EquivalenceMap:
    """Move the metric of (path, z0) onto the complement p' of ``s_prime``.

    gamma solves, in exponential coordinates,
        gamma' = U - 1/2 [U, gamma],   U = dphi'_t(A) - 1/2 w0(A, delta'_t A) z0,
    with gamma(0) = 0; this is the right-trivialized form of the defining ODE.
    """
    change = canonical_iso(s, s_prime)
    target = conjugate_path(path, change.a_map)
    A = change.A
    z0 = s.z0
    Bz = s.z0[0]

    def U(t):
        delta_p = nu_at(target, t)
        w = float(bracket(A, delta_p @ A)[0] / Bz)
        return target.dphi(t) @ A - 0.5 * w * z0

    def rhs(t, g):
        u = U(t)
        return u - 0.5 * bracket(u, g)

    sols = []
    y0 = np.zeros(2 * path.n + 1)
    for end in (t_span[0], t_span[1]):
        if end == 0 or np.allclose(A, 0):
            sols.append(None)
            continue
        sol = solve_ivp(rhs, (0.0, end), y0, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
        if not sol.success:
            raise PathError(f"gamma integration failed: {sol.message}")
        sols.append(sol)
    return EquivalenceMap(path, target, change, s, s_prime, tuple(sols), tuple(t_span))


def _derivation_residual(path, path_prime, M, Minv, w, t):
    lhs = w.c * nu_at(path_prime, w.c * t + w.d)
    rhs = M @ nu_at(path, t) @ Minv
    return float(np.max(np.abs(lhs - rhs)))


def verify_equivalence(
    path: AutomorphismPath,
    path_prime: AutomorphismPath,
    w: EquivalenceWitness,
    grid: Optional[Sequence[float]] = None,
    tol: float = 1e-8,
    s: Optional[Splitting] = None,
    s_prime: Optional[Splitting] = None,
) -> Check:
    """Check c nu'_{ct+d} = a nu_t a^{-1} over the grid.

    Both sides are compared as full derivations of h, so the choice of
    generator on either side (z0 vs c z0) does not enter.
    """
    grid = default_grid(path, 64) if grid is None else np.asarray(grid, dtype=float)
    try:
        s = s or infer_splitting(path, float(grid[0]))
        s_prime = s_prime or infer_splitting(path_prime, w.c * float(grid[0]) + w.d)
    except PathError as e:
        return Check(False, float("inf"), str(e))
    change = canonical_iso(s, Splitting(s.z0, s_prime.p_basis))
    M = change.a_map
    Minv = np.linalg.inv(M)
    res = max(sweep(lambda t: _derivation_residual(path, path_prime, M, Minv, w, t), grid))
    return Check(res <= tol, res, "" if res <= tol else "c nu'_{ct+d} differs from a nu_t a^-1")


def _spectrum(m: np.ndarray) -> np.ndarray:
    ev = np.linalg.eigvals(m)
    return ev[np.lexsort((ev.imag, ev.real))]


def search_equivalence(
    path: AutomorphismPath,
    path_prime: AutomorphismPath,
    c_values: Sequence[float],
    d_values: Sequence[float],
    grid: Optional[Sequence[float]] = None,
    tol: float = 1e-8,
) -> Optional[EquivalenceWitness]:
    """Coarse scan for a witness (c, d); spectra are compared first as a cheap filter."""
    grid = default_grid(path, 32) if grid is None else np.asarray(grid, dtype=float)
    t0 = float(grid[0])
    base = _spectrum(nu_at(path, t0))
    for c in c_values:
        if c == 0:
            continue
        for d in d_values:
            spec = _spectrum(c * nu_at(path_prime, c * t0 + d))
            if np.max(np.abs(spec - base)) > 1e-6:
                continue
            w = EquivalenceWitness(float(c), float(d))
            if verify_equivalence(path, path_prime, w, grid, tol):
                return w
    return None


# --- generic constructors -------------------------------------------------------


def one_parameter_path(generator, period: float = 1.0, z0=None) -> AutomorphismPath:
    """phi_t = exp(t D) for a derivation D."""
    D = np.asarray(generator, dtype=float)
    n = (D.shape[0] - 1) // 2
    return AutomorphismPath(
        n=n,
        evaluator=lambda t: expm(t * D),
        derivative=lambda t: D @ expm(t * D),
        period=period,
        kind="one_parameter",
        z0=z0,
        meta={"generator": D.tolist()},
    )


def custom_path(times: Sequence[float], matrices: Sequence, period: float = 1.0, z0=None) -> AutomorphismPath:
    """Path through sampled matrices, interpolated entrywise by cubic splines."""
    times = np.asarray(times, dtype=float)
    mats = np.asarray(matrices, dtype=float)
    if mats.ndim != 3 or mats.shape[0] != times.size or mats.shape[1] != mats.shape[2]:
        raise PathError("custom path needs one square matrix per sample time")
    spline = CubicSpline(times, mats, axis=0)
    dspline = spline.derivative()
    n = (mats.shape[1] - 1) // 2
    return AutomorphismPath(
        n=n,
        evaluator=lambda t: spline(t),
        derivative=lambda t: dspline(t),
        period=period,
        kind="custom",
        z0=z0,
        check_identity=bool(times[0] <= 0.0 <= times[-1]),
    )
