"""Command-line front end.

    heislorentz <command> --config FILE [--csv DIR] [--json] [--seed N]

Exit codes: 0 when every check passes, 1 when any check fails, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import CONVENTION, __version__
from .config import (
    ConfigError,
    RunConfig,
    build_lattice,
    build_path,
    build_splitting,
    default_splitting,
)
from .examples import (
    AdamsSpec,
    adams_cross_check,
    adams_path,
    homogeneous_path,
    j_blocks,
    monodromy_bundle,
)
from .geometry import (
    MetricError,
    SpacetimePoint,
    bracket_with_W,
    frame_gram,
    lie_derivative_matrix,
    metric_at,
    random_rigidity_problem,
    rigidity_dimension,
    signature_of,
    verify_map_isometry,
)
from .lie_core import biinvariant_gram, conjugation, warped_index
from .paths import (
    AutomorphismPath,
    EquivalenceWitness,
    PathError,
    check_nu_periodicity,
    check_Z_equivariance,
    infer_splitting,
    nu_at,
    validate_metric_defining,
    verify_equivalence,
)
from .quotient import deck_isometry_report, lattice_closure_check, lattice_preserved, standard_lattice
from .symplectic import Splitting, restrict

SCHEMA_VERSION = "report_v1"
COMMANDS = ("validate", "metric", "killing", "quotient", "equivalence", "example", "rigidity")
EXAMPLES = ("homogeneous", "adams", "monodromy")


def report_schema() -> dict:
    """The published JSON schema for ``--json`` reports."""
    return json.loads(resources.files(__package__).joinpath("report_v1.schema.json").read_text(encoding="utf-8"))


def _clean(x: Any) -> Any:
    """JSON-safe copy: numpy to lists, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return x


class Report:
    """Accumulates checks and sweep tables in insertion order."""

    def __init__(self, command: str, cfg: Optional[RunConfig], seed: int, name: Optional[str] = None):
        self.command = command
        self.name = name
        self.cfg = cfg
        self.seed = seed
        self.checks: list = []
        self.metric_profile: Optional[dict] = None
        self.killing_rows: list = []
        self.profile_rows: list = []
        self.profile_columns: list = []

    def check(self, name: str, passed: bool, residual: float = 0.0, informational: bool = False, **details) -> bool:
        entry = {"name": name, "pass": bool(passed), "max_residual": residual}
        if informational:
            entry["informational"] = True
        if details:
            entry["details"] = details
        self.checks.append(entry)
        return bool(passed)

    @property
    def ok(self) -> bool:
        return all(c["pass"] or c.get("informational") for c in self.checks)

    def to_dict(self) -> dict:
        out = {
            "schema": SCHEMA_VERSION,
            "version": __version__,
            "convention": CONVENTION,
            "command": self.command,
        }
        if self.name is not None:
            out["example"] = self.name
        out["seed"] = self.seed
        out["config"] = self.cfg.raw if self.cfg is not None else None
        out["ok"] = self.ok
        out["checks"] = self.checks
        if self.metric_profile is not None:
            out["metric_profile"] = self.metric_profile
        return _clean(out)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


# --- shared pieces -------------------------------------------------------------------


def _setup(cfg: RunConfig):
    path = build_path(cfg.path, cfg.n)
    s = build_splitting(cfg.splitting, cfg.n)
    if s is None:
        s = default_splitting(path, cfg.n)
    return path, s


def _random_points(path: AutomorphismPath, count: int, rng: np.random.Generator) -> list:
    lo, hi = -path.period, 2 * path.period
    return [SpacetimePoint(float(rng.uniform(lo, hi)), rng.uniform(-1.0, 1.0, 2 * path.n + 1)) for _ in range(count)]


def _frame_labels(n: int) -> list:
    return ["W", "Z0"] + [f"X{i}" for i in range(1, n + 1)] + [f"Y{i}" for i in range(1, n + 1)]


def _metric_profile(report: Report, path: AutomorphismPath, s: Splitting, grid) -> bool:
    """Fill the p-block profile and the full-frame CSV rows; False if the metric fails somewhere."""
    labels = _frame_labels(path.n)
    report.profile_columns = ["t"] + [f"g_{a}_{b}" for a in labels for b in labels]
    rows, blocks = [], []
    ok = True
    for t in grid:
        try:
            G = frame_gram(path, s, float(t))
        except MetricError:
            ok = False
            continue
        rows.append([float(t)] + G.ravel().tolist())
        blocks.append({"t": float(t), "p_block": G[2:, 2:]})
    report.profile_rows = rows
    report.metric_profile = {"basis": labels[2:], "rows": blocks}
    return ok


def _validate(report: Report, path, s, grid, tol) -> bool:
    rep = validate_metric_defining(path, s, grid, tol)
    worst = next((r.definiteness for r in rep.samples if r.definiteness and not r.definiteness.definite), None)
    details = {"grid_size": len(rep.grid), "reason": rep.reason}
    if worst is not None:
        details["witness"] = worst.witness
        details["min_eigenvalue"] = worst.min_eigenvalue
    return report.check("metric_defining", rep.overall, rep.max_residual, **details)


def _killing_sweep(report: Report, path, s, pts, tol_fd, step) -> None:
    basis = np.eye(2 * path.n + 1)
    worst = 0.0
    for x in pts:
        for k, K in enumerate(basis):
            r = float(np.max(np.abs(lie_derivative_matrix(path, s, K, x, step))))
            report.killing_rows.append([x.t, k, r])
            worst = max(worst, r)
    report.check("killing_equation", worst < tol_fd, worst, points=len(pts), basis_size=len(basis))


def _bracket_sweep(report: Report, path, pts, rng, tol_fd, step) -> None:
    worst = 0.0
    for x in pts:
        K = rng.normal(size=2 * path.n + 1)
        worst = max(worst, bracket_with_W(path, K, x, step).difference)
    report.check("bracket_with_W", worst < tol_fd, worst, points=len(pts))


def _deck(report: Report, path, s, L, samples, tol, seed) -> None:
    rep = deck_isometry_report(path, s, L, samples, tol, seed)
    report.check(
        "deck_isometry",
        rep.ok,
        rep.max_residual,
        refused=rep.refused,
        reason=rep.reason,
        generators=rep.generator_residuals,
        samples=rep.samples,
    )


# --- commands --------------------------------------------------------------------------


def cmd_validate(cfg: RunConfig, report: Report, rng) -> None:
    path, s = _setup(cfg)
    grid = cfg.grid_spec(path).values()
    _validate(report, path, s, grid, cfg.tolerances.algebraic)
    if path.kind in ("homogeneous", "adams", "monodromy", "one_parameter"):
        chk = check_Z_equivariance(path, grid[:64] if len(grid) else None, 1e-8)
        report.check("z_equivariance", chk.ok, chk.residual, informational=True, period=path.period)


def cmd_metric(cfg: RunConfig, report: Report, rng) -> None:
    path, s = _setup(cfg)
    n = cfg.n
    bad_sig, sym, consistency = 0, 0.0, 0.0
    failures = []
    for x in _random_points(path, cfg.samples.points, rng):
        try:
            ms = metric_at(path, s, x)
            sig = signature_of(ms)
        except MetricError as e:
            failures.append(str(e))
            continue
        if tuple(sig) != (1, 2 * n + 1):
            bad_sig += 1
        sym = max(sym, float(np.max(np.abs(ms.gram[2:, 2:] - ms.gram[2:, 2:].T))))
        consistency = max(consistency, float(np.max(np.abs(ms.frame.T @ ms.coord_form @ ms.frame - ms.gram))))
    report.check("signature", bad_sig == 0 and not failures, float(bad_sig), expected=[1, 2 * n + 1],
                 failures=failures[:5])
    report.check("p_block_symmetric", sym <= 1e-10, sym)
    report.check("frame_consistency", consistency <= 1e-10, consistency)
    ok = _metric_profile(report, path, s, cfg.grid_spec(path).values())
    report.check("profile_definite", ok, 0.0)


def cmd_killing(cfg: RunConfig, report: Report, rng) -> None:
    path, s = _setup(cfg)
    tol = cfg.tolerances
    pts = _random_points(path, cfg.samples.points, rng)
    _killing_sweep(report, path, s, pts, tol.fd, tol.step)
    _bracket_sweep(report, path, pts, rng, tol.fd, tol.step)


def cmd_quotient(cfg: RunConfig, report: Report, rng) -> None:
    path, s = _setup(cfg)
    L = build_lattice(cfg.lattice, cfg.n)
    closure = lattice_closure_check(L)
    report.check("lattice_closure", closure.ok, 0.0, pair=closure.pair, reason=closure.reason)
    eq = check_Z_equivariance(path, None, 1e-8)
    report.check("z_equivariance", eq.ok, eq.residual, period=path.period)
    if eq.ok:
        per = check_nu_periodicity(path, s, None, 1e-10)
        report.check("nu_periodicity", per.ok, per.residual)
        phi = path.meta.get("integer_power")
        pres = [lattice_preserved(phi(q) if phi and L.exact else path.phi(q * path.period), L) for q in (-1, 1)]
        report.check("lattice_preserved", all(pres), max(p.residual for p in pres),
                     reason=next((p.reason for p in pres if not p), ""))
    _deck(report, path, s, L, cfg.samples.deck, cfg.tolerances.fd, cfg.seed)


def cmd_equivalence(cfg: RunConfig, report: Report, rng) -> None:
    if cfg.equivalence is None:
        raise ConfigError("equivalence command needs an 'equivalence' section", "/equivalence")
    path, s = _setup(cfg)
    other = cfg.equivalence["other"]
    path2 = build_path(other["path"], cfg.n, "/equivalence/other/path")
    s2 = build_splitting(other.get("splitting"), cfg.n, "/equivalence/other/splitting")
    wd = cfg.equivalence["witness"]
    w = EquivalenceWitness(float(wd["c"]), float(wd.get("d", 0.0)))
    grid = cfg.grid_spec(path).values()
    try:
        s2 = s2 or infer_splitting(path2, w.c * float(grid[0]) + w.d)
    except PathError as e:
        report.check("criterion", False, float("inf"), reason=str(e))
        return
    chk = verify_equivalence(path, path2, w, grid, cfg.tolerances.algebraic * 10, s, s2)
    report.check("criterion", chk.ok, chk.residual, reason=chk.reason, witness={"c": w.c, "d": w.d})
    same_p = np.allclose(Splitting(s.z0, s2.p_basis).p_basis, s.p_basis) and np.allclose(
        s2.p_basis, s.p_basis
    )
    if chk.ok and same_p:
        # a is the identity: the map (t, h) -> (ct + d, h) is the isometry
        pts = _random_points(path, cfg.samples.isometry, rng)
        dst = Splitting(w.c * s.z0, s.p_basis)
        rep = verify_map_isometry(lambda x: SpacetimePoint(w.c * x.t + w.d, x.g), (path, s), (path2, dst), pts,
                                  cfg.tolerances.fd)
        report.check("rescaling_isometry", rep.ok, rep.max_residual, samples=len(pts))


def cmd_rigidity(cfg: Optional[RunConfig], report: Report, rng) -> None:
    rig = cfg.rigidity if cfg is not None else {"dims": [3, 4, 5, 6, 7, 8], "trials": 100}
    for d in rig["dims"]:
        dims = [rigidity_dimension(random_rigidity_problem(d, rng)) for _ in range(rig["trials"])]
        report.check(f"rigidity_dim{d}", max(dims) == 0, float(max(dims)), trials=rig["trials"])
    d = max(4, max(rig["dims"]))
    ctl = [rigidity_dimension(random_rigidity_problem(d, rng, codim=2)) for _ in range(10)]
    report.check("codim2_control", min(ctl) >= 1, float(min(ctl)), dim=d)


def _example_homogeneous(cfg, report: Report, rng) -> None:
    n = cfg.n if cfg else 1
    path = homogeneous_path(n)
    s = default_splitting(path, n)
    _validate(report, path, s, np.linspace(0, 2 * math.pi, 200), 1e-9)
    worst = 0.0
    for t in rng.uniform(-10, 10, 50):
        worst = max(worst, float(np.max(np.abs(conjugation(t, [1] * n) - path.phi(t)))))
    report.check("evaluator_matches_ad_exp", worst <= 1e-12, worst)
    # frame order (W, Z0*, X*, Y*) inside the warped basis {Z, X1, Y1, ..., W}
    order = [2 * n + 1, *warped_index(n)]
    G = biinvariant_gram(n)[np.ix_(order, order)]
    worst = 0.0
    for x in _random_points(path, 50, rng):
        worst = max(worst, float(np.max(np.abs(metric_at(path, s, x).gram - G))))
    report.check("biinvariant_on_killing", worst <= 1e-9, worst)
    pts = _random_points(path, 20, rng)
    _killing_sweep(report, path, s, pts, 1e-6, 1e-5)
    _bracket_sweep(report, path, pts, rng, 1e-6, 1e-5)
    _metric_profile(report, path, s, np.linspace(0, path.period, 32, endpoint=False))
    _deck(report, path, s, standard_lattice(n), 200, 1e-6, report.seed)


def _example_adams(cfg, report: Report, rng) -> None:
    n = cfg.n if cfg else 1
    fields = {}
    if cfg is not None and cfg.path.get("kind") == "adams":
        fields = {k: cfg.path[k] for k in ("center", "width", "floor", "amplitude", "quad_tol") if k in cfg.path}
    spec = AdamsSpec(n=n, **fields)
    bundle = adams_path(spec)
    path, model = bundle.path, bundle.model
    s = default_splitting(path, n)
    worst = 0.0
    for t in rng.uniform(0, 2 * math.pi, 100):
        nu = restrict(nu_at(path, model.H(t)), s)
        worst = max(worst, float(np.max(np.abs(nu - j_blocks(n, 1.0 / spec.m(t))[1:, 1:]))))
    report.check("nu_display", worst <= 1e-8, worst)
    # each raised-cosine lobe integrates to amplitude * width over one period
    exact = 2 * math.pi * spec.floor + spec.amplitude * spec.width
    report.check("alpha", abs(model.alpha - exact) <= 1e-9, abs(model.alpha - exact), alpha=model.alpha)
    eq = check_Z_equivariance(path, None, 1e-8)
    report.check("z_equivariance", eq.ok, eq.residual)
    per = check_nu_periodicity(path, s, None, 1e-10)
    report.check("nu_periodicity", per.ok, per.residual)
    cc = adams_cross_check(spec, 200, 1e-6, report.seed, bundle)
    report.check("f_map", cc.max_residual < 1e-6, cc.max_residual, samples=cc.samples)
    report.check("f_equivariance", cc.equivariance_residual <= 1e-9, cc.equivariance_residual)
    flat = adams_path(AdamsSpec(n=n, amplitude=0.0)).path
    hom = homogeneous_path(n)
    grid = np.linspace(0, 2 * math.pi, 256, endpoint=False)
    worst = max(float(np.max(np.abs(flat.phi(t) - hom.phi(t)))) for t in grid)
    report.check("flat_bump_is_homogeneous", worst <= 1e-12, worst)
    pts = _random_points(path, 20, rng)
    _killing_sweep(report, path, s, pts, 1e-6, 1e-5)
    _metric_profile(report, path, s, np.linspace(0, path.period, 64, endpoint=False))
    _deck(report, path, s, standard_lattice(n), 200, 1e-6, report.seed)


def _example_monodromy(cfg, report: Report, rng) -> None:
    n = cfg.n if cfg else 1
    b = monodromy_bundle(n)
    r = b.report
    report.check("exp_V_is_a", r["exp_error"] < 1e-9, r["exp_error"])
    report.check("b_conjugates_a_to_diagonal", r["conjugate_offdiag"] <= 1e-12, r["conjugate_offdiag"],
                 diagonal=r["conjugate_diag"])
    report.check("det_a", r["det_a"] == 1, 0.0)
    report.check("lattice_closure", r["closure"], 0.0)
    report.check("lattice_preserved", all(r["preserved"].values()), 0.0,
                 powers=[q for q, v in r["preserved"].items() if v])
    v = r["definiteness"]
    report.check(
        "definiteness",
        v.definite,
        v.min_eigenvalue,
        informational=True,
        verdict=v.verdict,
        witness=v.witness,
        eigenvector_null_residual=r["eigenvector_null_residual"],
        paper_conflict=r["paper_conflict"],
    )
    eq = check_Z_equivariance(b.path, None, 1e-8)
    report.check("z_equivariance", eq.ok, eq.residual)


def cmd_example(cfg, report: Report, rng, name: str) -> None:
    {"homogeneous": _example_homogeneous, "adams": _example_adams, "monodromy": _example_monodromy}[name](
        cfg, report, rng
    )


# --- output ---------------------------------------------------------------------------------


def emit_csv(report: Report, target: str | Path) -> list:
    """Write metric_profile.csv and killing_residuals.csv when the run produced them."""
    target = Path(target)
    target.mkdir(parents=True, exist_ok=True)
    written = []
    tables = (
        ("metric_profile.csv", report.profile_columns, report.profile_rows),
        ("killing_residuals.csv", ["t", "k_index", "residual"], report.killing_rows),
    )
    for name, header, rows in tables:
        if not rows:
            continue
        with open(target / name, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
        written.append(target / name)
    if not written:
        warnings.warn("no sweep data to write; no CSV emitted", stacklevel=2)
    return written


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="heislorentz", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("name", nargs="?", help="example name for the 'example' command")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--csv", metavar="DIR", help="directory for CSV sweep output")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def run(command: str, cfg: Optional[RunConfig], name: Optional[str] = None, seed: Optional[int] = None) -> Report:
    seed = seed if seed is not None else (cfg.seed if cfg is not None else 0)
    report = Report(command, cfg, seed, name)
    rng = np.random.default_rng(seed)
    if command == "example":
        cmd_example(cfg, report, rng, name)
    elif command == "rigidity":
        cmd_rigidity(cfg, report, rng)
    else:
        {
            "validate": cmd_validate,
            "metric": cmd_metric,
            "killing": cmd_killing,
            "quotient": cmd_quotient,
            "equivalence": cmd_equivalence,
        }[command](cfg, report, rng)
    return report


def _print_summary(report: Report, out) -> None:
    label = report.command + (f" {report.name}" if report.name else "")
    for c in report.checks:
        status = "PASS" if c["pass"] else ("INFO" if c.get("informational") else "FAIL")
        res = c["max_residual"]
        res = f"{res:.3e}" if isinstance(res, float) and math.isfinite(res) else str(res)
        print(f"{status:4}  {c['name']:<28} residual {res}", file=out)
    print(f"{label}: {'ok' if report.ok else 'FAILED'}", file=out)


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "example" and args.name not in EXAMPLES:
            raise ConfigError(f"example name must be one of {', '.join(EXAMPLES)}", "/name")
        if args.command != "example" and args.name is not None:
            raise ConfigError(f"unexpected argument {args.name!r}", "/name")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("seed must be non-negative", "/seed")
        cfg = RunConfig.load(args.config, args.seed) if args.config else None
        if cfg is None and args.command not in ("example", "rigidity"):
            raise ConfigError(f"--config is required for '{args.command}'")
        report = run(args.command, cfg, args.name, args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if args.json:
        sys.stdout.write(report.to_json())
    else:
        _print_summary(report, sys.stdout)
    if args.csv:
        emit_csv(report, args.csv)
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
