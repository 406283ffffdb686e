"""The twelve acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""

import math
import time

import numpy as np
from scipy.optimize import brentq
from scipy.special import lambertw

from odenorm import ode
from odenorm.core import ExponentField, StepFunction, boxplus_all, constant_a, refine_common
from odenorm.duality import holder_pair, iota_invariant, pairing_equality_check
from odenorm.norms import CompositePartition, composite_seminorm, lp_norm, nakano_norm, weight_isometry
from odenorm.verify import run_blowup_case, run_suite


def rand_breaks(rng, max_pieces=16):
    n = int(rng.integers(1, max_pieces + 1))
    inner = np.unique(rng.uniform(0, 1, n - 1))
    return np.concatenate(([0.0], inner[(inner > 0) & (inner < 1)], [1.0]))


def rand_step(rng, hi=10.0):
    b = rand_breaks(rng)
    return StepFunction(b, rng.uniform(0, hi, b.size - 1))


def rand_exponent(rng, lo=1.0, hi=8.0):
    b = rand_breaks(rng)
    return ExponentField(b, rng.uniform(lo, hi, b.size - 1))


def classical_lp(f, p):
    """(∫|f|^p)^(1/p) by exact cell sums."""
    return math.fsum((f.lengths * np.abs(f.values) ** p).tolist()) ** (1 / p)


def test_01_two_piece_values(acceptance):
    one = StepFunction.constant(1.0)
    p = ExponentField([0, 0.5, 1], [1, 2])
    cases = [(p, math.sqrt(3) / 2), (p.reflect(), 1 / math.sqrt(2) + 0.5)]
    lp_norm(one, p)  # warm-up
    errs, times = [], []
    for q, want in cases:
        t0 = time.perf_counter()
        rep = lp_norm(one, q, tol=1e-9)
        times.append(time.perf_counter() - t0)
        errs.append(abs(rep.value - want))
        assert rep.converged
    ok = max(errs) <= 1e-9 and max(times) < 0.010
    acceptance(1, "two-piece exponent values sqrt(3)/2 and 1/sqrt(2)+1/2", ok,
               f"max err {max(errs):.1e}, max time {1e3 * max(times):.2f} ms")
    assert ok


def test_02_constant_p_equivalence(acceptance):
    rng = np.random.default_rng(2)
    worst = 0.0
    t0 = time.perf_counter()
    for i in range(500):
        f = rand_step(rng)
        p = [1.0, 1.5, 2.0, 3.0, 8.0][i % 5]
        want = classical_lp(f, p)
        got = lp_norm(f, p).value
        worst = max(worst, abs(got - want) / max(want, 1e-300))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 1.0
    acceptance(2, "constant-p equivalence (500 instances)", ok,
               f"max rel err {worst:.1e}, {elapsed:.2f} s")
    assert ok


def test_03_oracle_equivalence(acceptance):
    rng = np.random.default_rng(3)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(500):
        # partition on p's own cells, so each cell norm sums several pieces of f
        f, p = rand_step(rng), rand_exponent(rng)
        got = lp_norm(f, p).value
        want = composite_seminorm(f, CompositePartition.standard(p))
        worst = max(worst, abs(got - want))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 2.0
    acceptance(3, "ODE norm = standard-form composite (500 instances)", ok,
               f"max abs err {worst:.1e}, {elapsed:.2f} s")
    assert ok


def test_04_nakano_sandwich(acceptance):
    rng = np.random.default_rng(4)
    worst = -math.inf
    for _ in range(500):
        f, p = rand_step(rng), rand_exponent(rng)
        nf, nk = lp_norm(f, p).value, nakano_norm(f, p, tol=1e-12)
        worst = max(worst, nk - nf, nf - 2 * nk)
    closed = 0.0
    for _ in range(100):
        f = rand_step(rng)
        p = float(rng.uniform(1, 8))
        want = p ** (-1 / p) * classical_lp(f, p)
        closed = max(closed, abs(nakano_norm(f, p, tol=1e-12) - want))
    ok = worst <= 1e-7 and closed <= 1e-8
    acceptance(4, "Nakano sandwich and constant-p closed form", ok,
               f"worst sandwich excess {worst:.2e}, closed-form err {closed:.1e}")
    assert ok


def _bisect_a(lo=1.0, hi=2.0):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * math.log(mid) < 1:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_05_inequality_suite(acceptance):
    rng = np.random.default_rng(5)
    a = constant_a()
    worst = -math.inf
    for _ in range(500):
        f, p1, p2 = rand_step(rng), rand_exponent(rng), rand_exponent(rng)
        worst = max(worst, lp_norm(f, p1).value - math.e * f.sup_norm())
        p0 = float(rng.uniform(1, 8))
        g, q = refine_common(f, p1)
        g = StepFunction(g.breakpoints, np.where(q.values >= p0, g.values, 0.0))
        worst = max(worst, lp_norm(g, p0).value / (1 + a) - lp_norm(g, p1).value)
        b = np.union1d(np.union1d(f.breakpoints, p1.breakpoints), p2.breakpoints)
        fb, q1, q2 = f.refine(b), p1.refine(b), p2.refine(b)
        h = StepFunction(b, np.where(q1.values <= q2.values, fb.values, 0.0))
        worst = max(worst, lp_norm(h, q1).value / (1 + a * math.e) - lp_norm(h, q2).value)
    # root-finders that share nothing with the library's Newton iteration
    roots = [float(np.real(1 / lambertw(1.0))), brentq(lambda x: x * math.log(x) - 1, 1, 2, xtol=1e-15),
             _bisect_a()]
    root_err = max(abs(r - 1.763222834) for r in roots + [a])
    ok = worst <= 1e-7 and root_err <= 1e-9
    acceptance(5, "sup bound, (1+a) and (1+ae) lower bounds, constant a", ok,
               f"worst excess {worst:.2e}, a = {a:.12f}, root spread {root_err:.1e}")
    assert ok


def test_06_norm_axioms(acceptance):
    names = ["triangle", "homogeneity", "lattice_monotonicity", "upper_lower_estimates"]
    t0 = time.perf_counter()
    report = run_suite(seed=6, trials=1000, tol=1e-8, families=["standard"], properties=names)
    elapsed = time.perf_counter() - t0
    failures = sum(r.failures for r in report.properties.values())
    trials = min(r.trials for r in report.properties.values())
    ok = failures == 0 and trials == 1000 and elapsed < 30
    acceptance(6, "norm axioms (1000 seeded trials each)", ok,
               f"{failures} failures, {elapsed:.1f} s")
    assert ok


def test_07_ode_facts(acceptance):
    rng = np.random.default_rng(7)
    mono, contr = -math.inf, -math.inf
    for _ in range(200):
        f, p = rand_step(rng), rand_exponent(rng)
        x0, y0 = rng.uniform(0, 5, 2)
        px, py = ode.integrate_lp(f, p, x0), ode.integrate_lp(f, p, y0)
        hi, lo = (px, py) if x0 >= y0 else (py, px)
        mono = max(mono, float(np.max(lo.phis - hi.phis)))
        contr = max(contr, abs(px.final - py.final) - abs(x0 - y0))
    ok = mono <= 0 and contr <= 1e-12
    acceptance(7, "initial-value monotonicity and contraction (200 pairs)", ok,
               f"monotone excess {mono:.1e}, contraction excess {contr:.1e}")
    assert ok


def test_08_structure_instances(acceptance):
    one = StepFunction.constant(1.0)
    t0 = time.perf_counter()
    clamp = ode.integrate_upsilon(ode.ClampStructure(), one, 1e-12, tol=1e-8, use_hook=False)
    t_clamp = time.perf_counter() - t0
    err_clamp = abs(clamp.final - (1 - math.exp(-1)))

    x0 = 0.5
    t0 = time.perf_counter()
    tw = ode.integrate_upsilon(ode.TimeWeightedStructure(), one, x0, tol=1e-8, use_hook=False)
    t_tw = time.perf_counter() - t0
    err_tw = float(np.max(np.abs(tw.phis - np.sqrt(x0**2 + tw.ts**2))))

    ok = (err_clamp <= 1e-6 and err_tw <= 1e-6 and t_clamp < 1 and t_tw < 1
          and clamp.status is ode.Status.CONVERGED and tw.status is ode.Status.CONVERGED)
    acceptance(8, "structure instances max(x-s,0) and t x^2/s", ok,
               f"errors {err_clamp:.1e} / {err_tw:.1e}, times {t_clamp:.2f} / {t_tw:.2f} s")
    assert ok


def test_09_nonexistence(acceptance):
    case = run_blowup_case()
    sampled = ode.norm_limit(1.0, ode.notin_exponent)
    fixed = ode.norm_limit(1.0, ode.notin_exponent, x0=0.6)
    ok = (case["pass"] and sampled.status is ode.Status.NOT_IN_CLASS
          and fixed.status is ode.Status.CONVERGED)
    acceptance(9, "unbounded exponent: small x0 not-in-class, x0 = 0.6 converged", ok,
               f"x0<=1e-3: {case['small_x0_status']}, x0=0.6: {case['large_x0_status']}, "
               f"0+ limit: {sampled.status.value}")
    assert ok


def test_10_duality(acceptance):
    rng = np.random.default_rng(10)
    holder_fail = 0
    for _ in range(1000):
        f, g, p = rand_step(rng), rand_step(rng), rand_exponent(rng, 1.25, 4.0)
        holder_fail += not holder_pair(f, g, p, tol=1e-8).holds
    gap, iota_err = 0.0, 0.0
    for p in (1.5, 2.0, 3.0, 4.0):
        for _ in range(25):
            f = rand_step(rng)
            f = StepFunction(f.breakpoints, f.values + 0.1)
            gap = max(gap, pairing_equality_check(f, p, tol=1e-8).gap)
            est = iota_invariant(f, p)
            iota_err = max(iota_err, float(np.max(np.abs(est.values[est.valid] - (p - 1)))))
    ok = holder_fail == 0 and gap < 8e-8 and iota_err <= 1e-4
    acceptance(10, "Hölder, pairing equality and iota = p - 1", ok,
               f"{holder_fail} Hölder failures, max gap {gap:.1e}, iota err {iota_err:.1e}")
    assert ok


def test_11_weighted_isometry(acceptance):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(200):
        f, p = rand_step(rng), rand_exponent(rng)
        b = rand_breaks(rng)
        w = StepFunction(b, 10.0 ** rng.uniform(-2, 2, b.size - 1))
        g = weight_isometry(f, w, p)
        worst = max(worst, abs(lp_norm(g, p, weight=w).value - lp_norm(f, p).value))
    ok = worst <= 1e-8
    acceptance(11, "weighted isometry (200 instances)", ok, f"max err {worst:.1e}")
    assert ok


def test_12_transpose_inequality(acceptance):
    rng = np.random.default_rng(12)
    worst = -math.inf
    for _ in range(500):
        m, n = rng.integers(1, 9, 2)
        x = rng.uniform(0, 10, (int(m), int(n)))
        p, r = sorted(rng.uniform(1, 8, 2))
        lhs = boxplus_all([boxplus_all(col, p) for col in x.T], r)
        rhs = boxplus_all([boxplus_all(row, r) for row in x], p)
        worst = max(worst, lhs - rhs)
    ok = worst <= 1e-12
    acceptance(12, "transpose inequality (500 matrices up to 8x8)", ok, f"worst excess {worst:.1e}")
    assert ok
