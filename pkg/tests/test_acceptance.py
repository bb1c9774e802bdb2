"""End-to-end acceptance criteria.

Each test appends one PASS/FAIL line to the acceptance log, which the
conftest hook prints in the terminal summary, and then asserts.
"""

import time

import numpy as np
import pytest

from lyapgap.anosov import anosov_diagnostic, hyperconvexity_check, projective_derivative_norm, transverse_exponent
from lyapgap.lyapunov import spectrum
from lyapgap.representation import (
    compound_matrix,
    contragredient,
    relator_deviation,
    symmetric_power,
    symmetric_power_matrix,
    wedge_power,
)
from lyapgap.thermo import enumerate_closed_geodesics, entropy, orbit_weights, renormalized_intersection

pytestmark = pytest.mark.acceptance

LONG = 1e4


def projective_fd(g, u, v, h=1e-4):
    # central difference of [g x(t)] on the unit sphere along the great circle through u towards v
    e1 = u / np.linalg.norm(u)
    e2 = v - (v @ e1) * e1
    e2 /= np.linalg.norm(e2)

    def y(t):
        w = g @ (np.cos(t) * e1 + np.sin(t) * e2)
        return w / np.linalg.norm(w)

    def chord(s):
        return np.linalg.norm(y(s) - y(-s)) / (2 * np.sin(s))

    # Richardson step removes the h^2 term of the central difference
    return (4 * chord(h / 2) - chord(h)) / 3


def random_sl(d, rng):
    g = rng.normal(size=(d, d))
    if np.linalg.det(g) < 0:
        g[0] *= -1
    return g / abs(np.linalg.det(g)) ** (1 / d)


def report(log, n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    log.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def spectra(surface, jx, jy, sym2, sym2y):
    """QR spectra at the long horizon, shared by criteria 2 and 3."""
    return {name: spectrum(surface, rep, LONG, 32, 11)
            for name, rep in (("jx", jx), ("jy", jy), ("sym2", sym2), ("sym2y", sym2y))}


def test_criterion_1_fuchsian_equality(surface, jx, acceptance_log):
    rows, ok = [], True
    for d in (2, 3, 4, 5):
        t0 = time.perf_counter()
        est = spectrum(surface, symmetric_power(jx, d), LONG, 32, 100 + d, n_jobs=-1)
        elapsed = time.perf_counter() - t0
        expected = (d - 1) / 2 - np.arange(d)
        gap_err = float(np.max(np.abs(est.gaps - 1)))
        lam_err = float(np.max(np.abs(est.lambdas - expected)))
        good = gap_err <= 0.04 and lam_err <= 0.03 and elapsed <= 300
        ok &= good
        rows.append(f"d={d} max|gap-1|={gap_err:.4f} max|lambda-exact|={lam_err:.4f} {elapsed:.1f}s")
    report(acceptance_log, 1, ok, "; ".join(rows))
    assert ok


def test_criterion_2_strict_gap(spectra, acceptance_log):
    rows, ok = [], True
    for name in ("jy", "sym2y"):
        est = spectra[name]
        for i, (g, se) in enumerate(zip(est.gaps, est.gap_stderr), 1):
            margin = (g - 1) / se
            ok &= bool(margin >= 3)
            rows.append(f"{name} gap{i}={g:.4f}+-{se:.4f} ({margin:.1f} stderr above 1)")
    report(acceptance_log, 2, ok, "; ".join(rows))
    assert ok


def test_criterion_3_three_way_relation(surface, jx, sym2, sym2y, table12, spectra, acceptance_log):
    rows, ok = [], True
    for name, rep in (("jx", jx), ("sym2", sym2), ("sym2y", sym2y)):
        for rank in range(1, rep.d):
            # rank p of rep is rank 1 of its p-th exterior power
            target = wedge_power(rep, rank)
            trans = transverse_exponent(surface, target, LONG, 16, 21, n_jobs=-1).value
            vals = {
                "qr": float(spectra[name].gaps[rank - 1]),
                "transverse": -trans,
                "J": renormalized_intersection(table12, rep, rank).J,
            }
            spread = max(abs(a - b) / min(a, b) for a in vals.values() for b in vals.values())
            good = spread <= 0.05 and trans <= -0.95
            ok &= good
            rows.append(f"{name} rank{rank} qr={vals['qr']:.4f} -T={vals['transverse']:.4f} "
                        f"J={vals['J']:.4f} spread={spread:.2%}")
    report(acceptance_log, 3, ok, "; ".join(rows))
    assert ok


def test_criterion_4_intersection_bound(jx, jy, table12, acceptance_log):
    rows, ok = [], True
    for name, base in (("jx", jx), ("jy", jy)):
        for d in (2, 3, 4, 5):
            rep = symmetric_power(base, d)
            for rank in range(1, d):
                est = renormalized_intersection(table12, rep, rank)
                good = est.J >= 1 - 2 * est.stderr
                if name == "jx":
                    good &= abs(est.J - 1) <= 1e-6
                ok &= bool(good)
                rows.append(f"sym{d - 1}({name}) r{rank} J-1={est.J - 1:+.1e}")
    report(acceptance_log, 4, ok, ", ".join(rows))
    assert ok


def test_criterion_5_entropy(surface, sym2, acceptance_log):
    t0 = time.perf_counter()
    table = enumerate_closed_geodesics(surface, 12.0)
    elapsed = time.perf_counter() - t0
    geo = entropy(table).h
    period = entropy(orbit_weights(table, sym2, [1]), 1).h
    ok = 0.8 <= geo <= 1.2 and 0.8 <= period <= 1.2 and elapsed <= 600
    report(acceptance_log, 5, ok, f"h(length)={geo:.4f} h(period sym2)={period:.4f} "
                                  f"orbits={len(table)} enumeration {elapsed:.1f}s")
    assert ok


def test_criterion_6_projective_derivative(acceptance_log):
    rng = np.random.default_rng(6)
    worst = 0.0
    for i in range(1000):
        d = 2 + i % 5
        g = rng.normal(size=(d, d))
        u, v = rng.normal(size=d), rng.normal(size=d)
        exact = projective_derivative_norm(g, u, v)
        worst = max(worst, abs(exact / projective_fd(g, u, v) - 1))
    ok = worst <= 1e-6
    report(acceptance_log, 6, ok, f"max relative error {worst:.2e} over 1000 triples, d=2..6")
    assert ok


def test_criterion_7_invariant_suite(surface, jy, sym2y, acceptance_log):
    h = 1e3
    t0 = time.perf_counter()
    checks = {}

    est = spectrum(surface, sym2y, h, 8, 1)
    checks["determinant"] = bool(np.all(np.abs(est.per_sample.sum(axis=1)) <= 1e-6))

    dual = spectrum(surface, contragredient(sym2y), h, 8, 1)
    tol = 3 * np.hypot(est.stderr, dual.stderr[::-1]) + 1e-6
    checks["duality"] = bool(np.all(np.abs(dual.lambdas + est.lambdas[::-1]) <= tol))

    rep4 = symmetric_power(jy, 4)
    base = spectrum(surface, rep4, h, 8, 2)
    w2 = spectrum(surface, wedge_power(rep4, 2), h, 8, 2)
    total = base.per_sample[:, 0] + base.per_sample[:, 1]
    se = np.hypot(w2.stderr[0], total.std(ddof=1) / np.sqrt(len(total)))
    checks["wedge additivity"] = bool(abs(w2.lambdas[0] - total.mean()) <= 3 * se + 1e-6)

    # forming a long product in float64 already destroys its small singular directions,
    # so the functor identities are checked on well-conditioned pairs
    rng = np.random.default_rng(7)
    pairs = [(random_sl(2, rng), random_sl(2, rng)) for _ in range(20)]
    pairs += [(jy.letter_matrix(i), jy.letter_matrix(j)) for i in range(8) for j in range(8)]
    func_ok = True
    for g, k in pairs:
        for n in range(1, 6):
            lhs = symmetric_power_matrix(g @ k, n)
            func_ok &= np.allclose(lhs, symmetric_power_matrix(g, n) @ symmetric_power_matrix(k, n),
                                   rtol=1e-8, atol=1e-8 * np.abs(lhs).max())
    pairs = [(random_sl(d, rng), random_sl(d, rng)) for d in range(3, 7) for _ in range(5)]
    pairs += [(rep4.letter_matrix(i), rep4.letter_matrix(j)) for i in range(8) for j in range(8)]
    for g, k in pairs:
        for p in range(2, len(g)):
            lhs = compound_matrix(g @ k, p)
            func_ok &= np.allclose(lhs, compound_matrix(g, p) @ compound_matrix(k, p),
                                   rtol=1e-8, atol=1e-8 * np.abs(lhs).max())
    checks["functoriality"] = bool(func_ok)

    reps = [jy, sym2y, rep4, wedge_power(rep4, 2), contragredient(sym2y)]
    checks["relator"] = all(relator_deviation(r)[1] <= 1e-6 for r in reps)

    a = spectrum(surface, sym2y, h, 4, 9, n_jobs=1)
    b = spectrum(surface, sym2y, h, 4, 9, n_jobs=2)
    checks["seed determinism"] = a.per_sample.tobytes() == b.per_sample.tobytes()

    elapsed = time.perf_counter() - t0
    ok = all(checks.values()) and elapsed <= 120
    failed = [k for k, v in checks.items() if not v]
    report(acceptance_log, 7, ok, f"{len(checks) - len(failed)}/{len(checks)} invariants green "
                                  f"{failed if failed else ''}in {elapsed:.1f}s")
    assert ok


def test_criterion_8_anosov_and_hyperconvexity(surface, jx, sym2, acceptance_log):
    fits = anosov_diagnostic(symmetric_power(jx, 4), 6)
    slopes = [f.slope for f in fits]
    score = hyperconvexity_check(surface, sym2, 100, 200.0, 0)
    ok = all(s < 0 for s in slopes) and score > 0.05
    report(acceptance_log, 8, ok, f"sym3 slopes {np.round(slopes, 4).tolist()}, hyperconvexity min-score {score:.4f}")
    assert ok
