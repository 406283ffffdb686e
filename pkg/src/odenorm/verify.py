"""Randomized property suite over the invariants of core, ode, norms and duality.

Each property draws one random instance per trial and returns its excess: how
far the checked inequality overshoots its allowed slack.  A trial fails when
the excess is positive or not finite.  Slack is an absolute multiple of the
requested tol plus a relative floating-point allowance proportional to the
magnitudes involved, so large-magnitude families are not failed by rounding
and near-zero norms cannot hide a violation.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import ode
from .core import (ExponentField, StepFunction, boxplus, boxplus_all, constant_a,
                   refine_common)
from .duality import duality_map, dual_pair, holder_pair, iota_invariant, pairing_equality_check
from .norms import CompositePartition, composite_seminorm, lp_norm, nakano_norm, weight_isometry

EPS = float(np.finfo(float).eps)
# relative allowance for accumulated rounding in a fold of up to ~50 steps
ROUND = 256 * EPS


@dataclass(frozen=True)
class Family:
    max_pieces: int
    max_magnitude: float
    max_exponent: float
    log_scale: bool


FAMILIES = {
    "standard": Family(16, 10.0, 8.0, False),
    "extreme": Family(16, 1e10, 1e4, True),
}


# -- random instances -----------------------------------------------------------


def random_breakpoints(rng: np.random.Generator, fam: Family) -> np.ndarray:
    n = int(rng.integers(1, fam.max_pieces + 1))
    inner = np.unique(rng.uniform(0.0, 1.0, n - 1))
    return np.concatenate(([0.0], inner[(inner > 0) & (inner < 1)], [1.0]))


def random_magnitudes(rng, fam: Family, size) -> np.ndarray:
    if fam.log_scale:
        return 10.0 ** rng.uniform(-3.0, math.log10(fam.max_magnitude), size)
    return rng.uniform(0.0, fam.max_magnitude, size)


def random_exponents(rng, fam: Family, size, lo: float = 1.0, hi: float | None = None) -> np.ndarray:
    hi = fam.max_exponent if hi is None else hi
    if fam.log_scale:
        return np.exp(rng.uniform(math.log(lo), math.log(hi), size))
    return rng.uniform(lo, hi, size)


def random_step(rng, fam: Family, zero_prob: float = 0.15) -> StepFunction:
    b = random_breakpoints(rng, fam)
    v = random_magnitudes(rng, fam, b.size - 1)
    v[rng.random(v.size) < zero_prob] = 0.0
    return StepFunction(b, v)


def random_exponent(rng, fam: Family, lo: float = 1.0, hi: float | None = None) -> ExponentField:
    b = random_breakpoints(rng, fam)
    return ExponentField(b, random_exponents(rng, fam, b.size - 1, lo, hi))


def _rel(*xs) -> float:
    return ROUND * max([abs(x) for x in xs] + [0.0])


# -- core ---------------------------------------------------------------------


def prop_boxplus_associativity(rng, fam, tol):
    a, b, c = random_magnitudes(rng, fam, 3).tolist()
    p = float(random_exponents(rng, fam, 1)[0])
    lhs = boxplus(boxplus(a, b, p), c, p)
    rhs = boxplus(a, boxplus(b, c, p), p)
    return abs(lhs - rhs) - 1e-12 * max(lhs, rhs)


def prop_boxplus_monotone_zero(rng, fam, tol):
    a, b, da = random_magnitudes(rng, fam, 3).tolist()
    p = float(random_exponents(rng, fam, 1)[0])
    if boxplus(a, 0.0, p) != a:
        return math.inf
    lo, hi = boxplus(a, b, p), boxplus(a + da, b, p)
    return max(lo - hi - 4 * EPS * hi, max(a, b) - lo - 4 * EPS * lo)


def _transpose_excess(x: np.ndarray, p: float, r: float) -> float:
    lhs = boxplus_all([boxplus_all(col, p) for col in x.T], r)
    rhs = boxplus_all([boxplus_all(row, r) for row in x], p)
    return lhs - rhs - 1e-12 - 16 * EPS * rhs


def prop_transpose_inequality(rng, fam, tol):
    m, n = rng.integers(1, 9, 2)
    x = random_magnitudes(rng, fam, (int(m), int(n)))
    p, r = sorted(random_exponents(rng, fam, 2).tolist())
    return _transpose_excess(x, p, r)


def prop_mixed_inequality(rng, fam, tol):
    a, b, c = random_magnitudes(rng, fam, 3).tolist()
    p, r = sorted(random_exponents(rng, fam, 2).tolist())
    lhs = boxplus(a, boxplus(b, c, p), r)
    rhs = boxplus(boxplus(a, b, r), c, p)
    return lhs - rhs - _rel(rhs)


def prop_refine_common_pointwise(rng, fam, tol):
    f, g = random_step(rng, fam), random_step(rng, fam)
    f2, g2 = refine_common(f, g)
    ts = rng.uniform(0.0, 1.0, 1000)
    bad = np.count_nonzero(f(ts) != f2(ts)) + np.count_nonzero(g(ts) != g2(ts))
    return float(bad) - 0.5


# -- ode ----------------------------------------------------------------------


def prop_initial_value_monotonicity(rng, fam, tol):
    f, p = random_step(rng, fam), random_exponent(rng, fam)
    y0, x0 = sorted(random_magnitudes(rng, fam, 2).tolist())
    hi = ode.integrate_lp(f, p, x0).phis
    lo = ode.integrate_lp(f, p, y0).phis
    return float(np.max(lo - hi - ROUND * hi))


def prop_contraction(rng, fam, tol):
    f, p = random_step(rng, fam), random_exponent(rng, fam)
    x0, y0 = random_magnitudes(rng, fam, 2).tolist()
    a = ode.integrate_lp(f, p, x0).final
    b = ode.integrate_lp(f, p, y0).final
    return abs(a - b) - abs(x0 - y0) - 1e-12 - _rel(a, b)


def prop_merging(rng, fam, tol):
    f, p = random_step(rng, fam), random_exponent(rng, fam)
    x0 = float(random_magnitudes(rng, fam, 1)[0])
    first = ode.integrate_lp(f, p, x0)
    k = int(rng.integers(1, first.ts.size - 1)) if first.ts.size > 2 else 0
    if k == 0:
        return -1.0
    t0 = float(first.ts[k])
    # second profile sits still at phi(t0) until t0, then follows the same data
    g = StepFunction(first.ts, np.where(first.ts[:-1] < t0, 0.0, f.refine(first.ts).values))
    second = ode.integrate_lp(g, p, float(first.phis[k]))
    diff = np.abs(first.phis[k:] - second.phis[k:])
    return float(np.max(diff - ROUND * first.phis[k:]))


def prop_profile_monotone(rng, fam, tol):
    f, p = random_step(rng, fam), random_exponent(rng, fam)
    x0 = float(random_magnitudes(rng, fam, 1)[0])
    prof = ode.integrate_lp(f, p, x0)
    zero = ode.integrate_lp(StepFunction(f.breakpoints, np.zeros(len(f))), p, x0)
    drop = float(np.max(-np.diff(prof.phis), initial=0.0))
    return max(drop, float(np.max(np.abs(zero.phis - x0))), abs(prof.phis[0] - x0))


def prop_grid_refinement_consistency(rng, fam, tol):
    f, p = random_step(rng, fam), random_exponent(rng, fam)
    x0 = float(random_magnitudes(rng, fam, 1)[0])
    n = int(rng.integers(2, 65))
    a = ode.integrate_lp(f, p, x0).final
    b = ode.integrate_lp(f, p, x0, subdivide=n).final
    return abs(a - b) - 1e-12 * max(a, b)


_HOOKED = [
    lambda rng, fam: ode.LpStructure(random_exponent(rng, fam)),
    lambda rng, fam: ode.ClampStructure(),
    lambda rng, fam: ode.TimeWeightedStructure(),
]


def prop_comparison(rng, fam, tol):
    u = _HOOKED[int(rng.integers(len(_HOOKED)))](rng, fam)
    f = random_step(rng, fam)
    f, h = refine_common(f, random_step(rng, fam))
    g = StepFunction(f.breakpoints, f.values + h.values)
    x0 = float(random_magnitudes(rng, fam, 1)[0]) or 1.0
    pf = ode.integrate_upsilon(u, f, x0, n=4)
    pg = ode.integrate_upsilon(u, g, x0, n=4)
    return float(np.max(pf.phis - pg.phis - ROUND * pg.phis))


# -- norms --------------------------------------------------------------------


def _norm(f, p, tol, **kw) -> float:
    rep = lp_norm(f, p, tol, **kw)
    return rep.value if rep.converged else math.nan


def prop_triangle(rng, fam, tol):
    f, g, p = random_step(rng, fam), random_step(rng, fam), random_exponent(rng, fam)
    nf, ng, nfg = _norm(f, p, tol), _norm(g, p, tol), _norm(f + g, p, tol)
    return nfg - nf - ng - 4 * tol - _rel(nf, ng)


def prop_homogeneity(rng, fam, tol):
    f, p = random_step(rng, fam), random_exponent(rng, fam)
    lam = float(rng.choice([-1.0, 1.0]) * random_magnitudes(rng, fam, 1)[0])
    nf, nl = _norm(f, p, tol), _norm(lam * f, p, tol)
    return abs(nl - abs(lam) * nf) - 1e-10 * abs(lam) * nf


def prop_lattice_monotonicity(rng, fam, tol):
    f, h, p = random_step(rng, fam), random_step(rng, fam), random_exponent(rng, fam)
    g = f.abs() + h.abs()
    nf, ng = _norm(f, p, tol), _norm(g, p, tol)
    return nf - ng - 2 * tol - _rel(ng)


def prop_nakano_sandwich(rng, fam, tol):
    f, p = random_step(rng, fam), random_exponent(rng, fam)
    nf = _norm(f, p, tol)
    nk = nakano_norm(f, p, tol=1e-3 * tol)
    slack = 1e-7 + _rel(nf, nk) + 1e-3 * tol
    return max(nk - nf - slack, nf - 2 * nk - slack)


def prop_sup_bound(rng, fam, tol):
    f, p = random_step(rng, fam), random_exponent(rng, fam)
    nf = _norm(f, p, tol)
    return nf - math.e * f.sup_norm() - 1e-7 - _rel(nf)


def prop_lower_bounds(rng, fam, tol):
    a = constant_a()
    f = random_step(rng, fam)
    p1, p2 = random_exponent(rng, fam), random_exponent(rng, fam)
    p0 = float(random_exponents(rng, fam, 1)[0])
    # (1/(1+a)) ‖1_{p1 >= p0} f‖_{p0} <= ‖1_{p1 >= p0} f‖_{p1}
    fa, pa = refine_common(f, p1)
    ga = StepFunction(fa.breakpoints, np.where(pa.values >= p0, fa.values, 0.0))
    lhs1, rhs1 = _norm(ga, p0, tol) / (1 + a), _norm(ga, p1, tol)
    # (1/(1+ae)) ‖1_{p1 <= p2} f‖_{p1} <= ‖1_{p1 <= p2} f‖_{p2}
    q1, q2 = refine_common(p1, p2)
    fb = f.refine(np.union1d(f.breakpoints, q1.breakpoints))
    q1, q2 = q1.refine(fb.breakpoints), q2.refine(fb.breakpoints)
    gb = StepFunction(fb.breakpoints, np.where(q1.values <= q2.values, fb.values, 0.0))
    lhs2, rhs2 = _norm(gb, q1, tol) / (1 + a * math.e), _norm(gb, q2, tol)
    return max(lhs1 - rhs1 - 1e-7 - _rel(rhs1), lhs2 - rhs2 - 1e-7 - _rel(rhs2))


def prop_oracle_equivalence(rng, fam, tol):
    f, p = random_step(rng, fam), random_exponent(rng, fam)
    nf = _norm(f, p, tol)
    oracle = composite_seminorm(f, CompositePartition.standard(p))
    return abs(nf - oracle) - 1e-9 - _rel(oracle)


def prop_upper_lower_estimates(rng, fam, tol):
    f, p = random_step(rng, fam), random_exponent(rng, fam)
    f, _ = refine_common(f, p)
    k = int(rng.integers(1, min(len(f), 6) + 1))
    owner = rng.integers(0, k, len(f))
    parts = [StepFunction(f.breakpoints, np.where(owner == i, f.values, 0.0)) for i in range(k)]
    norms = [_norm(g, p, tol) for g in parts]
    total = _norm(f, p, tol)
    upper = boxplus_all(norms, p.ess_inf)
    lower = boxplus_all(norms, p.ess_sup)
    slack = 4 * tol + _rel(total)
    return max(total - upper - slack, lower - total - slack)


def prop_rearrangement_sensitivity(rng, fam, tol):
    lam = float(random_magnitudes(rng, fam, 1)[0]) or 1.0
    one = StepFunction.constant(lam)
    p = ExponentField([0.0, 0.5, 1.0], [1.0, 2.0])
    a, b = _norm(one, p, tol), _norm(one, p.reflect(), tol)
    want_a, want_b = lam * math.sqrt(3) / 2, lam * (1 / math.sqrt(2) + 0.5)
    return max(abs(a - want_a), abs(b - want_b)) - tol - _rel(want_b)


def prop_weight_isometry(rng, fam, tol):
    f, p = random_step(rng, fam), random_exponent(rng, fam)
    b = random_breakpoints(rng, fam)
    w = StepFunction(b, 10.0 ** rng.uniform(-2, 2, b.size - 1))
    g = weight_isometry(f, w, p)
    a, c = _norm(g, p, tol, weight=w), _norm(f, p, tol)
    return abs(a - c) - 1e-8 - _rel(a, c)


# -- duality ------------------------------------------------------------------
# J raises |f| to the power p - 1, so these properties keep p in [1.25, 4].


def _dual_exponent(rng, fam) -> ExponentField:
    return random_exponent(rng, FAMILIES["standard"], 1.25, 4.0)


def prop_duality_homogeneity(rng, fam, tol):
    f = random_step(rng, fam)
    p = float(rng.uniform(1.25, 4.0))
    lam = float(10.0 ** rng.uniform(-2, 2))
    lhs = duality_map(lam * f, p).values
    rhs = lam ** (p - 1) * duality_map(f, p).values
    return float(np.max(np.abs(lhs - rhs) - 1e-12 * np.abs(rhs)))


def prop_duality_power_identity(rng, fam, tol):
    f, p = random_step(rng, fam), _dual_exponent(rng, fam)
    pair = dual_pair(f, p)
    g, q = refine_common(f, p)
    jf, ps = pair.jf.refine(g.breakpoints), pair.pstar.refine(g.breakpoints)
    lhs, rhs = np.abs(jf.values) ** ps.values, np.abs(g.values) ** q.values
    return float(np.max(np.abs(lhs - rhs) - 1e-12 * rhs))


def prop_holder_and_equality(rng, fam, tol):
    f, g, p = random_step(rng, fam), random_step(rng, fam), _dual_exponent(rng, fam)
    res = holder_pair(f, g, p, tol)
    holder = res.pairing - res.bound - 4 * tol - _rel(res.bound)
    q = float(rng.uniform(1.25, 4.0))
    chk = pairing_equality_check(f, q, tol)
    equality = chk.gap - 8 * tol - _rel(chk.lhs, chk.rhs)
    return max(holder, equality)


def prop_iota_constant_p(rng, fam, tol):
    f = random_step(rng, fam, zero_prob=0.0)
    p = float(rng.choice([1.5, 2.0, 3.0, 4.0]))
    est = iota_invariant(f, p, grid=16)
    vals = est.values[est.valid]
    return float(np.max(np.abs(vals - (p - 1)), initial=0.0)) - 1e-4 * (p - 1)


# -- registry -----------------------------------------------------------------

Property = Callable[[np.random.Generator, Family, float], float]

REGISTRY: dict[str, Property] = {
    "boxplus_associativity": prop_boxplus_associativity,
    "boxplus_monotone_zero": prop_boxplus_monotone_zero,
    "transpose_inequality": prop_transpose_inequality,
    "mixed_inequality": prop_mixed_inequality,
    "refine_common_pointwise": prop_refine_common_pointwise,
    "initial_value_monotonicity": prop_initial_value_monotonicity,
    "contraction": prop_contraction,
    "merging": prop_merging,
    "profile_monotone": prop_profile_monotone,
    "grid_refinement_consistency": prop_grid_refinement_consistency,
    "comparison": prop_comparison,
    "triangle": prop_triangle,
    "homogeneity": prop_homogeneity,
    "lattice_monotonicity": prop_lattice_monotonicity,
    "nakano_sandwich": prop_nakano_sandwich,
    "sup_bound": prop_sup_bound,
    "lower_bounds": prop_lower_bounds,
    "oracle_equivalence": prop_oracle_equivalence,
    "upper_lower_estimates": prop_upper_lower_estimates,
    "rearrangement_sensitivity": prop_rearrangement_sensitivity,
    "weight_isometry": prop_weight_isometry,
    "duality_homogeneity": prop_duality_homogeneity,
    "duality_power_identity": prop_duality_power_identity,
    "holder_and_equality": prop_holder_and_equality,
    "iota_constant_p": prop_iota_constant_p,
}


@dataclass
class PropertyResult:
    trials: int = 0
    failures: int = 0
    worst_violation: float = -math.inf
    failing_seed: list | None = None


@dataclass
class PropertyReport:
    seed: int
    trials: int
    tol: float
    families: list
    properties: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.failures == 0 for r in self.properties.values())

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items()}
        for r in out["properties"].values():
            # JSON has no infinities
            w = r["worst_violation"]
            r["worst_violation"] = w if math.isfinite(w) else repr(w)
        out["pass"] = self.passed
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def run_suite(seed: int = 42, trials: int = 200, tol: float = 1e-8,
              families=("standard", "extreme"), properties=None) -> PropertyReport:
    """Run every registered property ``trials`` times per family.

    Trial i of property k under family j uses the generator seeded by
    ``[seed, k, j, i]``; that list is recorded for the first failure so a
    single trial can be replayed with :func:`replay`.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    families = list(families)
    for name in families:
        if name not in FAMILIES:
            raise ValueError(f"unknown family {name!r}; known: {sorted(FAMILIES)}")
    names = list(REGISTRY) if properties is None else list(properties)
    report = PropertyReport(seed, trials, tol, families)
    for name in names:
        if name not in REGISTRY:
            raise ValueError(f"unknown property {name!r}")
        k = list(REGISTRY).index(name)
        res = PropertyResult()
        for j, fam_name in enumerate(families):
            for i in range(trials):
                key = [seed, k, j, i]
                excess = _evaluate(REGISTRY[name], key, FAMILIES[fam_name], tol)
                res.trials += 1
                if not excess <= 0:
                    res.failures += 1
                    if res.failing_seed is None:
                        res.failing_seed = key
                if math.isnan(excess):
                    excess = math.inf
                res.worst_violation = max(res.worst_violation, excess)
        report.properties[name] = res
    return report


def _evaluate(prop: Property, key, fam: Family, tol: float) -> float:
    rng = np.random.default_rng(np.random.SeedSequence(key))
    with np.errstate(all="ignore"):
        try:
            return float(prop(rng, fam, tol))
        except (ValueError, OverflowError, FloatingPointError, ZeroDivisionError):
            return math.inf


def replay(name: str, key, family: str = "standard", tol: float = 1e-8) -> float:
    """Excess of a single trial, e.g. one recorded as ``failing_seed``."""
    return _evaluate(REGISTRY[name], key, FAMILIES[family], tol)


# -- the non-member example -------------------------------------------------------


@dataclass(frozen=True)
class BlowupCase:
    x0: float
    status: ode.Status
    max_increment: float
    final: float


def run_blowup_case(cap: float = 1e6, small_x0=(1e-3, 5e-4, 2.5e-4), large_x0: float = 0.6,
                    levels=(14, 15, 16)) -> dict:
    """The unbounded exponent with f = 1 on grids 2**14 .. 2**16.

    Small initial values should be classified not-in-class and the fixed
    large one converged.
    """
    profiles = []
    for k, x0 in zip(levels, small_x0):
        p = ode.notin_exponent_field(2**k, cap)
        profiles.append(ode.integrate_lp(StepFunction.constant(1.0), p, x0))
    small = ode.nonexistence_diagnostic(profiles)
    large_profiles = [
        ode.integrate_lp(StepFunction.constant(1.0), ode.notin_exponent_field(2**k, cap), large_x0)
        for k in levels
    ]
    large = ode.nonexistence_diagnostic(large_profiles)
    cases = [
        BlowupCase(pr.x0, small, ode.max_increment(pr, 0.05 * pr.final), pr.final) for pr in profiles
    ] + [
        BlowupCase(pr.x0, large, ode.max_increment(pr, 0.05 * pr.final), pr.final) for pr in large_profiles
    ]
    ok = small is ode.Status.NOT_IN_CLASS and large is ode.Status.CONVERGED
    return {
        "cap": cap,
        "small_x0_status": small.value,
        "large_x0_status": large.value,
        "pass": ok,
        "cases": [dict(asdict(c), status=c.status.value) for c in cases],
    }
