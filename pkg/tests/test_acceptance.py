"""Acceptance gate: twelve end-to-end checks at their stated tolerances.

Each test records one PASS/FAIL line, collected in the terminal summary.
"""

import cmath
import math

import numpy as np

from convexcyclic.constructions import (
    MockEpsilonOracle,
    disk_touching_polynomial,
    epsilon_greedy_approximation,
    scale_operator,
)
from convexcyclic.convex_poly import (
    cesaro_mean,
    eval_scalar,
    make_convex,
    pkc,
    pkc_identity_residual,
    pkc_identity_scale,
)
from convexcyclic.core import Identity, build_operator, diagonal, forward_shift, operator_from_matrix
from convexcyclic.criteria import (
    Trend,
    Verdict,
    classify_operator,
    diagonal_classifier,
    hahn_banach_probe,
    is_m_isometry,
    m_isometry_defect,
    misometry_seminorm_estimate,
    necessary_conditions_report,
)
from convexcyclic.errors import NoExponentFound
from convexcyclic.experiment import dirichlet_weights
from convexcyclic.hull import (
    best_convex_approximation,
    brute_force_simplex_oracle,
    compute_orbit,
    density_probe,
    lattice_resolution,
)

PAIR = build_operator(diagonal([2j, -2j]))


def random_operator(rng, d):
    return operator_from_matrix(rng.uniform(-1, 1, (d, d)) + 1j * rng.uniform(-1, 1, (d, d)))


def test_pkc_identity(acceptance_line):
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(1, 9))
        T = random_operator(rng, d)
        x = rng.uniform(-1, 1, d) + 1j * rng.uniform(-1, 1, d)
        for c in (1.5, 2.0, 3.0):
            for k in range(1, 26):
                ratio = pkc_identity_residual(T, x, c, k) / pkc_identity_scale(T, x, k)
                worst = max(worst, ratio)
    ok = worst <= 1e-9
    acceptance_line(1, "geometric-weight identity on 50 random operators", ok, f"max residual/scale {worst:.2e}")
    assert ok


def test_family_coherence(acceptance_line):
    exact = all(pkc(k, 1).coeffs == cesaro_mean(k).coeffs for k in range(1, 51))
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        raw = rng.random(int(rng.integers(1, 40)))
        raw[rng.random(raw.size) < 0.3] = 0
        if raw.sum() == 0:
            raw[0] = 1
        p = make_convex(raw / raw.sum())
        worst = max(worst, abs(eval_scalar(p, 1) - 1))
    ok = exact and worst <= 1e-12
    acceptance_line(2, "pkc(k, 1) is the Cesaro mean; p(1) = 1", ok, f"exact={exact}, max |p(1)-1| {worst:.1e}")
    assert ok


def test_solver_against_brute_force(acceptance_line):
    rng = np.random.default_rng(3)
    grids = {1: 1, 2: 200, 3: 120, 4: 60, 5: 30, 6: 20}
    worst = -np.inf
    for _ in range(100):
        k = int(rng.integers(1, 7))
        d = int(rng.integers(1, 5))  # real dimension 2d <= 8
        pts = rng.standard_normal((k, d)) + 1j * rng.standard_normal((k, d))
        y = 1.5 * (rng.standard_normal(d) + 1j * rng.standard_normal(d))
        grid = grids[k]
        oracle = brute_force_simplex_oracle(pts, y, grid)
        dist = best_convex_approximation(pts, y).distance
        # solver may not exceed the lattice optimum, nor undercut it by more than the lattice spacing allows
        excess = max(dist - oracle - 1e-3, oracle - dist - 1e-3 - lattice_resolution(pts, y, grid))
        worst = max(worst, excess)
    ok = worst <= 0
    acceptance_line(3, "Frank-Wolfe solver agrees with lattice brute force (100 instances)", ok, f"worst slack {worst:.2e}")
    assert ok


def test_spiral_density_probe(acceptance_line):
    targets = [[2 * cmath.exp(1j * math.pi * j / 4)] for j in range(8)]
    res = density_probe(build_operator(diagonal([2j])), [1], targets, 64, 1e-3, max_iter=10_000)
    iters = [h.iterations for h in res.approximations]
    ok = max(res.residuals) <= 1e-3 and max(iters) <= 10_000
    acceptance_line(4, "hull of the 2i-orbit reaches every spiral target", ok, f"max residual {max(res.residuals):.1e}, max iterations {max(iters)}")
    assert ok


def test_conjugate_pair_obstruction(acceptance_line):
    orbit = compute_orbit(PAIR, [1, 1], 200)
    worst = 0.0
    checkpoints = 0

    def check(it, a):
        nonlocal worst, checkpoints
        checkpoints += 1
        v = orbit.rows.T @ a
        worst = max(worst, abs(v[1] - np.conj(v[0])) - 1e-8 * np.linalg.norm(v))

    h = best_convex_approximation(orbit, [1, -1], callback=check)
    ok = h.distance >= math.sqrt(2) - 1e-6 and worst <= 0 and checkpoints > 0
    acceptance_line(
        5,
        "diag(2i, -2i) hull stays in {(w, conj w)}, distance to (1, -1) >= sqrt 2",
        ok,
        f"distance {h.distance:.12f}, {checkpoints} checkpoints, worst excess {worst:.1e}",
    )
    assert ok


def test_bounded_witness(acceptance_line):
    tr = hahn_banach_probe(PAIR, [1, 1], [-1j, -1j], 200)
    n = np.arange(201)
    zero = bool(np.all(np.abs(tr.values) <= 1e-12 * 2.0**n))
    ok = zero and tr.classification is Trend.BOUNDED
    acceptance_line(6, "functional (-i, -i) is a bounded witness", ok, f"max |value| {np.abs(tr.values).max():.1e}, {tr.classification.value}")
    assert ok


def test_necessary_gates(acceptance_line):
    identity_fails = not necessary_conditions_report(build_operator(Identity(4))).norm_gt_one
    shift_fails = not necessary_conditions_report(build_operator(forward_shift([1, 1], 3))).dense_range
    U = build_operator(diagonal([cmath.exp(1j * math.pi * (k + 1) / 5) for k in range(4)]))
    reps = [is_m_isometry(U, m, 2.0, samples=100, tol=1e-9) for m in (1, 2, 3)]
    flagged = all(r.is_m_isometry and max(abs(d) for d in r.defects) <= 1e-9 for r in reps)
    verdict = classify_operator(U)
    gated = verdict.verdict is Verdict.NOT_CONVEX_CYCLIC and any(r.criterion == "m-isometry" for r in verdict.reasons)
    ok = identity_fails and shift_fails and flagged and gated
    acceptance_line(
        7,
        "norm, dense-range and m-isometry gates",
        ok,
        f"identity={identity_fails}, shift={shift_fails}, unimodular flagged={flagged}, gated={gated}",
    )
    assert ok


def test_dirichlet_two_isometry(acceptance_line):
    T = build_operator(forward_shift(dirichlet_weights(64), 64))
    basis = np.eye(64)
    worst = max(abs(m_isometry_defect(T, basis[k], 2, 2.0)) for k in range(62))
    est = misometry_seminorm_estimate(T, basis[0], 2, 2.0, 50)
    ok = worst <= 1e-9 and abs(est.estimate - 1) <= 0.05
    acceptance_line(8, "Dirichlet-type shift is a 2-isometry with seminorm 1", ok, f"max defect {worst:.1e}, estimate {est.estimate:.4f}")
    assert ok


def test_epsilon_greedy_certificate(acceptance_line):
    rng = np.random.default_rng(9)
    failures = 0
    for trial in range(200):
        eps = float(rng.uniform(0.1, 0.9))
        d = int(rng.integers(1, 9))
        delta = float(10 ** rng.uniform(-3, math.log10(0.5)))
        y = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        y /= np.linalg.norm(y)
        res = epsilon_greedy_approximation(None, None, y, eps, 0, delta, oracle=MockEpsilonOracle(eps, seed=trial))
        s = res.steps
        contract = all(b <= eps * a for a, b in zip(s, s[1:]))
        final = res.achieved_error <= eps**res.n_terms
        failures += not (contract and final and res.zero_branch_step is None)
    y = np.array([0.6, 0.8j])
    zero = epsilon_greedy_approximation(None, None, y, 0.5, 0, 0.01, oracle=MockEpsilonOracle(0.5, exact_at={1}))
    branch_ok = zero.zero_branch_step == 1 and zero.achieved_error <= 2 * 0.5**zero.n_terms
    ok = failures == 0 and branch_ok
    acceptance_line(
        9,
        "epsilon-greedy contraction and error bound (200 mock trials + zero branch)",
        ok,
        f"{failures} failing trials, zero-branch error {zero.achieved_error:.2e} vs {2 * 0.5**zero.n_terms:.2e}",
    )
    assert ok


def test_disk_touching(acceptance_line):
    a = disk_touching_polynomial(2j)
    ok_a = np.allclose(a.polynomial.coeffs, [3 / 5, 2 / 5], rtol=0, atol=1e-15)
    ok_a = ok_a and abs(abs(eval_scalar(a.polynomial, 2j)) - 1) <= 1e-10
    b = disk_touching_polynomial(-2)
    ok_b = np.allclose(b.polynomial.coeffs, [1 / 3, 2 / 3], rtol=0, atol=1e-15)
    ok_b = ok_b and abs(eval_scalar(b.polynomial, -2) + 1) <= 1e-10
    try:
        disk_touching_polynomial(2)
        ok_c = False
    except NoExponentFound:
        ok_c = True
    ok = ok_a and ok_b and ok_c
    acceptance_line(10, "disk-touching polynomials for 2i, -2 and 2", ok, f"2i={ok_a}, -2={ok_b}, 2 raises={ok_c}")
    assert ok


def test_scaling_trace_identity(acceptance_line):
    rng = np.random.default_rng(11)
    c = 1.7
    cn = c ** np.arange(41)
    worst = plain = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 9))
        T = random_operator(rng, d)
        x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        f = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        base = hahn_banach_probe(T, x, f, 40).values
        scaled = hahn_banach_probe(scale_operator(T, c), x, f, 40).values
        err = np.abs(scaled - cn * base)
        # Re <v, f> cancels to near zero for some n; measure against |f| |(cT)^n x|
        size = cn * np.linalg.norm(f) * np.linalg.norm(compute_orbit(T, x, 40).rows, axis=1)
        worst = max(worst, float(np.max(err / size)))
        plain = max(plain, float(np.max(err / np.abs(cn * base))))
    ok = worst <= 1e-12
    acceptance_line(11, "probe of 1.7 T is 1.7^n times probe of T", ok, f"max rel. error {worst:.1e} (value-relative {plain:.1e})")
    assert ok


def test_classifier_table(acceptance_line):
    table = [
        ([2j, -2 + 2j], "complex", Verdict.CONVEX_CYCLIC),
        ([3, 2j], "complex", Verdict.NOT_CONVEX_CYCLIC),
        ([1.5j * (1 + 1e-12), 1.5j], "complex", Verdict.NOT_CONVEX_CYCLIC),
        ([2j, -2j], "complex", Verdict.CRITERION_PASSES_WITH_CAVEAT),
        ([-2, -3], "real", Verdict.CONVEX_CYCLIC),
        ([-0.5], "real", Verdict.NOT_CONVEX_CYCLIC),
    ]
    got = [diagonal_classifier(eigs, field).verdict for eigs, field, _ in table]
    misses = [str(row[0]) for row, v in zip(table, got) if v is not row[2]]
    ok = not misses
    acceptance_line(12, "diagonal classifier table", ok, "all 6 rows" if ok else f"wrong: {misses}")
    assert ok

