"""Acceptance criteria 1-10, each at its published tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""

import json
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, brute_bch
from heislorentz.cli import main
from heislorentz.examples import (
    AdamsSpec,
    adams_cross_check,
    adams_path,
    homogeneous_path,
    j_blocks,
    monodromy_bundle,
    monodromy_path,
    MonodromySpec,
)
from heislorentz.geometry import (
    SpacetimePoint,
    bracket_with_W,
    lie_derivative_matrix,
    metric_at,
    random_rigidity_problem,
    rigidity_dimension,
    verify_map_isometry,
)
from heislorentz.lie_core import (
    ad_exp_tW,
    bch_multiply,
    biinvariant_gram,
    biinvariant_inner,
    bracket_form,
    inverse,
    warped_index,
)
from heislorentz.paths import (
    EquivalenceWitness,
    change_complement,
    check_nu_periodicity,
    check_Z_equivariance,
    nu_at,
    one_parameter_path,
    rescale_path,
    search_equivalence,
    validate_metric_defining,
    verify_equivalence,
)
from heislorentz.quotient import deck_isometry_report, standard_lattice
from heislorentz.symplectic import Splitting, restrict, standard_splitting

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def record(number: int, ok: bool, summary: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {summary}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def points(rng, n, count, lo=-8.0, hi=8.0):
    return [SpacetimePoint(float(rng.uniform(lo, hi)), rng.uniform(-1, 1, 2 * n + 1)) for _ in range(count)]


def user_path(n: int, seed: int = 3):
    """exp(t D) with D = Omega^{-1} S on p, S symmetric positive definite."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2 * n, 2 * n))
    S = a @ a.T + 2 * np.eye(2 * n)
    D = np.zeros((2 * n + 1, 2 * n + 1))
    D[1:, 1:] = np.linalg.solve(bracket_form(n)[1:, 1:], S)
    return one_parameter_path(D, period=1.0)


@pytest.fixture(scope="module")
def adams_bundle():
    return adams_path(AdamsSpec(n=1, center=1.0, width=1.3, amplitude=0.7))


def random_rational(rng, size):
    return np.array([Fraction(int(a), int(b)) for a, b in zip(rng.integers(-20, 21, size), rng.integers(1, 13, size))], dtype=object)


def test_criterion_1_exact_group_law():
    rng = np.random.default_rng(1)
    bad, times = 0, []
    for n in (1, 2, 3):
        triples = [tuple(random_rational(rng, 2 * n + 1) for _ in range(3)) for _ in range(1000)]
        zero = np.array([Fraction(0)] * (2 * n + 1), dtype=object)
        start = time.perf_counter()
        products = []
        for u, v, w in triples:
            uv = bch_multiply(u, v)
            products.append(uv)
            bad += not np.array_equal(bch_multiply(uv, w), bch_multiply(u, bch_multiply(v, w)))
            bad += not np.array_equal(bch_multiply(u, zero), u) or not np.array_equal(bch_multiply(zero, u), u)
            bad += not np.array_equal(bch_multiply(u, inverse(u)), zero)
        times.append(time.perf_counter() - start)
        # independent coordinate-by-coordinate oracle, outside the timed region
        bad += sum(not np.array_equal(p, brute_bch(u, v, -1)) for p, (u, v, _) in zip(products, triples))
    ok = bad == 0 and sum(times) < 1.0
    record(1, ok, f"1000 rational triples per n=1,2,3, {bad} violations, axiom checks {', '.join(f'{t:.2f}' for t in times)} s (total < 1 s)")


def test_criterion_2_biinvariant_metric():
    rng = np.random.default_rng(2)
    sig_ok = True
    for n in (1, 2, 3):
        ev = np.linalg.eigvalsh(biinvariant_gram(n))
        sig_ok &= (int(np.sum(ev < 0)), int(np.sum(ev > 0))) == (1, 2 * n + 1)
    lam = [1, Fraction(1, 2)]
    ad_res = 0.0
    for _ in range(100):
        t = rng.uniform(-10, 10)
        u, v = rng.normal(size=6), rng.normal(size=6)
        m = ad_exp_tW(t, lam)
        ad_res = max(ad_res, abs(biinvariant_inner(m @ u, m @ v) - biinvariant_inner(u, v)))
    gram_res = 0.0
    for n in (1, 2):
        path, s = homogeneous_path(n), standard_splitting(n)
        order = [2 * n + 1, *warped_index(n)]
        G = biinvariant_gram(n)[np.ix_(order, order)]
        for x in points(rng, n, 50):
            gram_res = max(gram_res, float(np.max(np.abs(metric_at(path, s, x).gram - G))))
    ok = sig_ok and ad_res < 1e-9 and gram_res < 1e-9
    record(2, ok, f"signature ok={sig_ok}, Ad residual {ad_res:.1e}, homogeneous Gram residual {gram_res:.1e} (< 1e-9)")


PATHS_N2 = {
    "homogeneous": lambda: homogeneous_path(2, [1, Fraction(1, 2)]),
    "adams": lambda: adams_path(AdamsSpec(n=2, center=0.5, width=1.1, amplitude=0.8)).path,
    "user": lambda: user_path(2),
}


def test_criterion_3_killing():
    rng = np.random.default_rng(3)
    parts, ok = [], True
    for name, make in PATHS_N2.items():
        path = make()
        s = standard_splitting(2)
        valid = validate_metric_defining(path, s, np.linspace(-3, 3, 61)).overall
        start = time.perf_counter()
        worst = 0.0
        for x in points(rng, 2, 50):
            for K in np.eye(5):
                worst = max(worst, float(np.max(np.abs(lie_derivative_matrix(path, s, K, x)))))
        elapsed = time.perf_counter() - start
        ok &= valid and worst < 1e-6 and elapsed < 10.0
        parts.append(f"{name} {worst:.1e} in {elapsed:.1f} s")
    record(3, ok, "max |L_K g| over 50 points x 5 basis K at n=2 (< 1e-6, < 10 s): " + ", ".join(parts))


def test_criterion_4_bracket_formula():
    rng = np.random.default_rng(4)
    parts, ok = [], True
    for name, make in PATHS_N2.items():
        path = make()
        worst = max(bracket_with_W(path, rng.normal(size=5), x).difference for x in points(rng, 2, 100))
        ok &= worst < 1e-6
        parts.append(f"{name} {worst:.1e}")
    record(4, ok, "[K*, W] analytic vs finite difference over 100 samples (< 1e-6): " + ", ".join(parts))


def test_criterion_5_rigidity():
    rng = np.random.default_rng(5)
    worst = {d: max(rigidity_dimension(random_rigidity_problem(d, rng)) for _ in range(100)) for d in range(3, 9)}
    control = min(rigidity_dimension(random_rigidity_problem(6, rng, codim=2)) for _ in range(20))
    ok = all(v == 0 for v in worst.values()) and control >= 1
    record(5, ok, f"max stabilizer dimension per dim 3..8 = {list(worst.values())}, codim-2 control min = {control}")


def test_criterion_6_equivalences(adams_bundle):
    rng = np.random.default_rng(6)
    path, s = adams_bundle.path, standard_splitting(1)
    w = EquivalenceWitness(2.0, 0.3)
    q = rescale_path(path, w)
    pts = points(rng, 1, 50, -6, 6)
    resc = verify_map_isometry(lambda x: SpacetimePoint(2 * x.t + 0.3, x.g), (path, s), (q, s.scaled(2.0)), pts, 1e-6)
    sp = Splitting(s.z0, np.array([[1.0, 1, 0], [0, 0, 1]]))
    em = change_complement(path, s, sp)
    theta = verify_map_isometry(em, (path, s), (em.target_path, sp), pts, 1e-6)
    grid = np.linspace(0, path.period, 48, endpoint=False)
    acc_resc = verify_equivalence(path, q, w, grid, 1e-8, s, s.scaled(2.0))
    acc_theta = verify_equivalence(path, em.target_path, EquivalenceWitness(1.0), grid, 1e-8, s, sp)
    found = search_equivalence(
        homogeneous_path(1), monodromy_path(MonodromySpec(1)), [-2, -1, -0.5, 0.5, 1, 2], np.linspace(-1, 1, 5)
    )
    ok = resc.ok and theta.ok and bool(acc_resc) and bool(acc_theta) and found is None
    record(
        6,
        ok,
        f"rescaling isometry {resc.max_residual:.1e}, theta isometry {theta.max_residual:.1e} (< 1e-6); "
        f"witnesses accepted {bool(acc_resc)}/{bool(acc_theta)}; homogeneous vs monodromy rejected {found is None}",
    )


def test_criterion_7_adams(adams_bundle):
    rng = np.random.default_rng(7)
    path, model = adams_bundle.path, adams_bundle.model
    spec = model.spec
    s = standard_splitting(1)
    display = 0.0
    for t in rng.uniform(0, 2 * math.pi, 100):
        nu = restrict(nu_at(path, model.H(t)), s)
        display = max(display, float(np.max(np.abs(nu - j_blocks(1, 1.0 / spec.m(t))[1:, 1:]))))
    alpha_err = abs(model.alpha - (2 * math.pi * spec.floor + spec.amplitude * spec.width))
    equiv = check_Z_equivariance(path, None, 1e-8)
    cc = adams_cross_check(spec, 200, 1e-6, 0, adams_bundle)
    flat, hom = adams_path(AdamsSpec(n=1, amplitude=0.0)).path, homogeneous_path(1)
    degen = max(float(np.max(np.abs(flat.phi(t) - hom.phi(t)))) for t in np.linspace(-7, 7, 201))
    ok = display < 1e-8 and alpha_err <= 1e-9 and equiv.ok and cc.max_residual < 1e-6 and degen <= 1e-12
    record(
        7,
        ok,
        f"nu display {display:.1e}, alpha error {alpha_err:.1e}, equivariance {equiv.residual:.1e}, "
        f"F-map {cc.max_residual:.1e}, flat bump {degen:.1e}",
    )


def test_criterion_8_monodromy():
    r = monodromy_bundle(1, qmax=5).report
    v = r["definiteness"]
    witness_ok = v.witness is not None and np.isclose(np.linalg.norm(v.witness), 1.0)
    ok = (
        r["exp_error"] < 1e-9
        and r["conjugate_offdiag"] <= 1e-12
        and r["closure"]
        and all(r["preserved"][q] for q in range(-5, 6))
        and witness_ok
        and r["paper_conflict"] is True
    )
    record(
        8,
        ok,
        f"|e^V - a| {r['exp_error']:.1e}, off-diagonal {r['conjugate_offdiag']:.1e}, closure {r['closure']}, "
        f"|q|<=5 preserved {all(r['preserved'].values())}, verdict {v.verdict} with witness, paper_conflict {r['paper_conflict']}",
    )


def test_criterion_9_deck(adams_bundle):
    parts, ok = [], True
    for name, path in (("homogeneous", homogeneous_path(1)), ("adams", adams_bundle.path)):
        s = standard_splitting(1)
        rep = deck_isometry_report(path, s, standard_lattice(1), 200, 1e-6, 9)
        per = check_nu_periodicity(path, s, None, 1e-10)
        ok &= rep.ok and rep.samples >= 200 and per.residual < 1e-10
        parts.append(f"{name} deck {rep.max_residual:.1e} over {rep.samples}, periodicity {per.residual:.1e}")
    record(9, ok, "; ".join(parts))


CLI_RUNS = [
    ["validate", "--config", str(CONFIGS / "homogeneous.json")],
    ["metric", "--config", str(CONFIGS / "adams.json")],
    ["killing", "--config", str(CONFIGS / "one_parameter.json")],
    ["quotient", "--config", str(CONFIGS / "adams.json")],
    ["equivalence", "--config", str(CONFIGS / "equivalence_rescaled.json")],
    ["rigidity", "--config", str(CONFIGS / "rigidity.json")],
    ["example", "homogeneous"],
    ["example", "adams"],
    ["example", "monodromy"],
]


def test_criterion_10_determinism(capsys):
    mismatched = []
    for argv in CLI_RUNS:
        outs = []
        for _ in range(2):
            main(argv + ["--json", "--seed", "17"])
            outs.append(capsys.readouterr().out)
        json.loads(outs[0])
        if outs[0] != outs[1]:
            mismatched.append(" ".join(argv[:2]))
    record(10, not mismatched, f"{len(CLI_RUNS)} CLI commands run twice with seed 17, mismatched: {mismatched or 'none'}")
