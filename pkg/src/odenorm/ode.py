"""Accumulated-norm ODEs and their integrators.

The L^{p(.)} norm of f is phi(1), where phi solves (in the Caratheodory sense)

    phi(0) = 0+,   phi'(t) = |f(t)|^{p(t)} / p(t) * phi(t)^{1 - p(t)}.

On a cell where f and p are constant the equation is separable, and the
solution over a step of length dt is phi ⊞_p dt^{1/p}|f|.  Step-function
inputs are therefore integrated exactly by folding that update over the
merged breakpoints.  General right-hand sides Υ(s, x, t) go through
:func:`integrate_upsilon`, which uses an implicit monotone step.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, Union

import numpy as np

from .core import ExponentField, GridFunction, StepFunction, boxplus, merge_breakpoints

EPS = np.finfo(float).eps


class Status(str, enum.Enum):
    CONVERGED = "converged"
    NOT_IN_CLASS = "not-in-class"
    MAX_REFINEMENT = "max-refinement"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class SolutionProfile:
    """The path t -> phi(t) on a grid, with the initial value that produced it."""

    ts: np.ndarray
    phis: np.ndarray
    x0: float
    status: Status = Status.CONVERGED
    error_bound: float = 0.0

    def __post_init__(self):
        for name in ("ts", "phis"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.ts.shape != self.phis.shape:
            raise ValueError("ts and phis must have the same length")

    @property
    def final(self) -> float:
        return float(self.phis[-1])

    def at(self, t: float) -> float:
        """Linear interpolation between grid values."""
        return float(np.interp(t, self.ts, self.phis))


@dataclass(frozen=True)
class NormReport:
    value: float
    error_bound: float
    status: Status
    diagnostics: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "error_bound": self.error_bound,
            "status": self.status.value,
            "diagnostics": dict(self.diagnostics),
        }


# -- the L^{p(.)} instance ------------------------------------------------------


def segment_update(phi: float, absf: float, p: float, dt: float) -> float:
    """Exact solution after a step of length dt with |f| and p held constant."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if phi < 0 or absf < 0:
        raise ValueError("phi and |f| must be nonnegative")
    if absf == 0:
        return phi
    return boxplus(phi, dt ** (1.0 / p) * absf, p)


def _cell_table(b: np.ndarray, *fs: StepFunction | None):
    mids = 0.5 * (b[:-1] + b[1:])
    return [None if g is None else g.values[g.cell_index(mids)] for g in fs]


def integrate_lp(
    f: StepFunction,
    p,
    x0: float,
    weight: StepFunction | None = None,
    subdivide: int | None = None,
) -> SolutionProfile:
    """Fold :func:`segment_update` over the merged breakpoints of f, p and weight.

    ``x0 = 0`` gives the 0+ solution directly: every segment map is continuous
    and nondecreasing in phi, so the monotone limit x0 -> 0 commutes with the
    fold.  ``weight`` is the density dmu/dm and scales each dt.  ``subdivide``
    adds a uniform n-cell grid, which changes nothing but the output
    resolution.
    """
    p = ExponentField.of(p)
    if x0 < 0:
        raise ValueError("initial value must be >= 0")
    if weight is not None and np.any(weight.values <= 0):
        raise ValueError("weight must be positive")
    b = merge_breakpoints(f, p, weight)
    if subdivide:
        b = np.union1d(b, np.linspace(0.0, 1.0, subdivide + 1))
    fv, pv, wv = _cell_table(b, f, p, weight)
    dts = np.diff(b)
    if wv is not None:
        dts = dts * wv

    phi = float(x0)
    phis = [phi]
    status = Status.CONVERGED
    for a, q, dt in zip(np.abs(fv).tolist(), pv.tolist(), dts.tolist()):
        if a:
            phi = segment_update(phi, a, q, dt)
            if not math.isfinite(phi):
                status = Status.MAX_REFINEMENT
                phis.extend([math.inf] * (b.size - len(phis)))
                break
        phis.append(phi)
    return SolutionProfile(b, phis, float(x0), status)


# -- general structure functions ----------------------------------------------------


class StructureFunction:
    """Right-hand side Υ(s, x, t) of phi' = Υ(phi, |f|, t).

    Subclasses implement ``__call__``.  They may also provide
    ``exact_segment(phi, x, t0, t1)`` returning the exact solution across a
    step where |f| = x is constant, and ``breakpoints`` where the
    t-dependence jumps.

    The pointwise conditions (Υ nonincreasing in s and nondecreasing in x,
    positive homogeneity, Υ(0+, x, t) > 0) can be probed with
    :func:`validate_structure`.  Hypotheses about the solutions themselves,
    such as subadditivity, are analytic and stay the caller's responsibility.
    """

    exact_segment: Callable[[float, float, float, float], float] | None = None
    breakpoints: np.ndarray | None = None

    def __call__(self, s: float, x: float, t: float) -> float:
        raise NotImplementedError


class LpStructure(StructureFunction):
    """|f|^p / p * phi^(1-p) for a step exponent p(.)."""

    def __init__(self, p):
        self.p = ExponentField.of(p)
        self.breakpoints = self.p.breakpoints
        self._bps = self.p.breakpoints[1:-1].tolist()
        self._vals = self.p.values.tolist()

    def exponent(self, t: float) -> float:
        return self._vals[bisect.bisect_right(self._bps, t)]

    def __call__(self, s, x, t):
        if x == 0:
            return 0.0
        p = self.exponent(t)
        if p == 1:
            return x
        if s == 0:
            return math.inf
        log_val = p * math.log(x) - math.log(p) + (1.0 - p) * math.log(s)
        return math.exp(log_val) if log_val < 709.0 else math.inf

    def exact_segment(self, phi, x, t0, t1):
        return segment_update(phi, x, self.exponent(0.5 * (t0 + t1)), t1 - t0)


class ClampStructure(StructureFunction):
    """max(|f| - phi, 0)."""

    def __call__(self, s, x, t):
        return max(x - s, 0.0)

    def exact_segment(self, phi, x, t0, t1):
        if phi >= x:
            return phi
        return x - (x - phi) * math.exp(-(t1 - t0))


class TimeWeightedStructure(StructureFunction):
    """t |f|^2 / phi."""

    def __call__(self, s, x, t):
        num = t * x * x
        if num == 0:
            return 0.0
        return num / s if s > 0 else math.inf

    def exact_segment(self, phi, x, t0, t1):
        # phi phi' = t x^2 integrates to phi^2 = phi0^2 + x^2 (t1^2 - t0^2)
        return math.sqrt(phi * phi + x * x * (t1 * t1 - t0 * t0))


class BandMaxStructure(StructureFunction):
    """max over p in [p1, p2] of |f|^p / p * phi^(1-p).

    In log form the objective is convex in p, so the maximum sits at an
    endpoint.
    """

    def __init__(self, p1: float, p2: float):
        if not 1 <= p1 < p2 < math.inf:
            raise ValueError("need 1 <= p1 < p2 < inf")
        self._ends = (LpStructure(p1), LpStructure(p2))

    def __call__(self, s, x, t):
        return max(u(s, x, t) for u in self._ends)


def validate_structure(u: StructureFunction, rng: np.random.Generator | None = None,
                       probes: int = 200, rtol: float = 1e-9) -> list[str]:
    """Probe the pointwise conditions at random points; returns violation messages."""
    rng = rng if rng is not None else np.random.default_rng(0)
    problems = []
    for _ in range(probes):
        s1, s2 = sorted(rng.uniform(0.05, 5.0, 2))
        x1, x2 = sorted(rng.uniform(0.0, 5.0, 2))
        t = float(rng.uniform(1e-3, 1.0))
        lam = float(rng.uniform(0.1, 10.0))
        if u(s2, x1, t) > u(s1, x1, t) * (1 + rtol):
            problems.append(f"increasing in s at t={t:.4g}")
        if u(s1, x2, t) < u(s1, x1, t) * (1 - rtol):
            problems.append(f"decreasing in x at t={t:.4g}")
        lhs, rhs = u(lam * s1, lam * x2, t), lam * u(s1, x2, t)
        if abs(lhs - rhs) > rtol * max(abs(rhs), 1e-300):
            problems.append(f"not positively homogeneous at t={t:.4g}")
        if u(s1, 0.0, t) != 0:
            problems.append(f"Υ(s, 0, t) != 0 at t={t:.4g}")
        if x2 > 0 and not u(1e-12 * x2, x2, t) > 0:
            problems.append(f"Υ(0+, x, t) not positive at t={t:.4g}")
    return problems


def _upsilon_pass(u: StructureFunction, f: StepFunction, x0: float, n: int,
                  use_hook: bool) -> SolutionProfile:
    b = np.union1d(np.linspace(0.0, 1.0, n + 1), f.breakpoints)
    if u.breakpoints is not None:
        b = np.union1d(b, u.breakpoints)
    (fv,) = _cell_table(b, f)
    hook = u.exact_segment if use_hook else None
    phi = float(x0)
    phis = [phi]
    for t0, t1, x in zip(b[:-1].tolist(), b[1:].tolist(), np.abs(fv).tolist()):
        if hook is not None:
            phi = hook(phi, x, t0, t1)
        elif x:
            phi = _implicit_step(u, phi, x, t0, t1)
        phis.append(phi)
    return SolutionProfile(b, phis, float(x0))


def _implicit_step(u, phi, x, t0, t1):
    # Trapezoidal corrector s = phi + h/2 (Υ(phi, t0) + Υ(s, t1)).  The
    # residual is increasing in s because Υ is nonincreasing in s, and the
    # explicit predictor bounds the root from above, so a bracketed solve
    # (Illinois variant of regula falsi) always converges.  The right end is
    # taken as a left limit so a jump of Υ in t at t1 belongs to the next cell.
    h = t1 - t0
    t1 = math.nextafter(t1, t0)
    g0 = u(phi, x, t0)

    def residual(s):
        return s - phi - 0.5 * h * (g0 + u(s, x, t1))

    lo, hi = phi, phi + 0.5 * h * (g0 + u(phi, x, t1))
    if not math.isfinite(hi):
        raise FloatingPointError("explicit predictor is not finite; raise x0")
    f_lo, f_hi = residual(lo), residual(hi)
    if f_lo >= 0:
        return lo
    if f_hi <= 0:
        return hi
    side = 0
    for _ in range(200):
        s = hi - f_hi * (hi - lo) / (f_hi - f_lo)
        if not lo < s < hi:
            s = 0.5 * (lo + hi)
        f_s = residual(s)
        if f_s == 0:
            return s
        if f_s < 0:
            lo, f_lo = s, f_s
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            hi, f_hi = s, f_s
            if side == 1:
                f_lo *= 0.5
            side = 1
        if hi - lo <= 4 * EPS * hi:
            break
    return 0.5 * (lo + hi)


def integrate_upsilon(
    u: StructureFunction,
    f: StepFunction,
    x0: float,
    n: int = 16,
    *,
    tol: float = 1e-8,
    max_doublings: int = 24,
    use_hook: bool = True,
) -> SolutionProfile:
    """Solve phi' = Υ(phi, |f|, t), phi(0) = x0, doubling the grid until phi(1) settles.

    With ``use_hook`` and a structure that supplies ``exact_segment`` the
    steps are exact, so the first doubling already agrees.
    """
    if x0 <= 0:
        raise ValueError("integrate_upsilon needs x0 > 0")
    if n < 1:
        raise ValueError("grid size must be >= 1")
    prev = _upsilon_pass(u, f, x0, n, use_hook)
    diff = math.inf
    for k in range(1, max_doublings + 1):
        cur = _upsilon_pass(u, f, x0, n * 2**k, use_hook)
        diff = abs(cur.final - prev.final)
        # rounding floor, so huge magnitudes can still settle
        if diff < tol + 64 * EPS * abs(cur.final):
            return replace(cur, status=Status.CONVERGED, error_bound=diff)
        prev = cur
    return replace(prev, status=Status.MAX_REFINEMENT, error_bound=diff)


# -- non-existence ------------------------------------------------------------


def max_increment(profile: SolutionProfile, floor: float) -> float:
    """Largest single-step increase among steps that start at or above ``floor``.

    Steps starting below the floor are the start-up t^{1/p} transient of a
    tiny initial value and say nothing about interior jumps.
    """
    phis = profile.phis
    inc = np.diff(phis)
    keep = phis[:-1] >= floor
    return float(inc[keep].max()) if np.any(keep) else 0.0


def nonexistence_diagnostic(profiles: Sequence[SolutionProfile], jump_frac: float = 0.05) -> Status:
    """Classify a refinement sequence as converged or not-in-class.

    ``profiles`` should come from decreasing initial values and doubling grids.
    The instance is flagged when every profile keeps a single-step increment
    above ``jump_frac * phi(1)`` (a jump that refinement does not resolve, so no
    absolutely continuous solution exists), or when a profile blew up.  This is
    a heuristic proxy: it cannot tell a true jump from a very slowly resolving
    one.
    """
    if len(profiles) < 3:
        raise ValueError("the diagnostic needs at least three profiles")
    for prof in profiles:
        final = prof.final
        if not math.isfinite(final):
            return Status.NOT_IN_CLASS
        floor = jump_frac * final
        if max_increment(prof, floor) <= floor:
            return Status.CONVERGED
    return Status.NOT_IN_CLASS


# -- the unbounded exponent that produces a non-member --------------------------------

_LOG_3_2 = math.log(1.5)


def notin_exponent(t, cap: float = 1e6):
    """p(t) with (1/p)(2/3)^{1-p} = 1/(t - 1/2) on (1/2, 1], p = 1 elsewhere.

    Solved per point by Newton's method on (p - 1) log(3/2) - log p = -log(t - 1/2),
    which is convex in p; starting to the right of the root makes the
    iteration decrease monotonically onto the branch that blows up at 1/2+.
    """
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    mask = t > 0.5
    if np.any(mask):
        c = -np.log(t[mask] - 0.5)
        p = 2.0 * (c + 2.0) / _LOG_3_2 + 2.0
        for _ in range(100):
            g = (p - 1.0) * _LOG_3_2 - np.log(p) - c
            step = g / (_LOG_3_2 - 1.0 / p)
            p = p - step
            if np.all(np.abs(step) <= 1e-14 * p):
                break
        out[mask] = np.minimum(p, cap)
    return out if out.ndim else float(out)


def notin_exponent_field(n: int, cap: float = 1e6) -> ExponentField:
    return ExponentField.of(GridFunction.from_callable(lambda t: notin_exponent(t, cap), n))


# -- the 0+ limit ---------------------------------------------------------------

Source = Union[StepFunction, GridFunction, Callable, float]


def _is_sampled(obj) -> bool:
    return callable(obj) and not isinstance(obj, StepFunction)


def _reflect(obj):
    if obj is None:
        return None
    if isinstance(obj, StepFunction):
        return obj.reflect()
    if _is_sampled(obj):
        return lambda t: obj(1.0 - np.asarray(t))
    return obj


def _to_step(obj, n: int | None = None):
    if obj is None or isinstance(obj, StepFunction):
        return obj
    if isinstance(obj, GridFunction):
        return obj.to_step()
    if _is_sampled(obj):
        return GridFunction.from_callable(obj, n).to_step()
    return StepFunction.constant(float(obj))


def norm_limit(
    f: Source,
    p: Source,
    tol: float = 1e-8,
    weight: Source | None = None,
    direction: str = "forward",
    *,
    x0: float | None = None,
    min_level: int = 10,
    max_level: int = 16,
) -> NormReport:
    """phi_f(1) for the 0+ initial value, with a certificate.

    Step inputs are integrated exactly from phi(0) = 0.  Two extra runs at
    x0 = tol/2 and tol/4 must bracket that value and differ by less than
    tol/2 (the initial-value contraction); otherwise the report is downgraded
    to max-refinement.  Callables are sampled on grids of 2**min_level ..
    2**max_level cells until phi(1) settles within tol, and the sequence is
    screened by :func:`nonexistence_diagnostic`.

    ``direction="backward"`` evaluates the left-handed variant by reflecting
    every input.  A given ``x0`` replaces the 0+ limit by that initial value.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if direction not in ("forward", "backward"):
        raise ValueError(f"unknown direction {direction!r}")
    if direction == "backward":
        f, p, weight = _reflect(f), _reflect(p), _reflect(weight)
    if any(_is_sampled(g) for g in (f, p, weight)):
        return _sampled_limit(f, p, weight, tol, x0, min_level, max_level)

    f, p, weight = _to_step(f), ExponentField.of(_to_step(p)), _to_step(weight)
    start = 0.0 if x0 is None else float(x0)
    main = integrate_lp(f, p, start, weight)
    nseg = main.ts.size - 1
    diag = {
        "x0": start,
        "segments": float(nseg),
        "max_step_increment": float(np.max(np.diff(main.phis), initial=0.0)),
        "rounding": float(4.0 * EPS * nseg * abs(main.final)),
    }
    if main.status is not Status.CONVERGED:
        return NormReport(main.final, math.inf, main.status, diag)
    if x0 is not None or f.is_zero():
        return NormReport(main.final, 0.0, Status.CONVERGED, diag)

    half = integrate_lp(f, p, tol / 2, weight).final
    quarter = integrate_lp(f, p, tol / 4, weight).final
    slack = diag["rounding"] + 4.0 * EPS * abs(half)
    diag.update(phi_half_tol=half, phi_quarter_tol=quarter, certificate_gap=half - quarter)
    ok = (
        main.final <= quarter + slack
        and quarter <= half + slack
        and half - quarter < tol / 2 + slack
    )
    return NormReport(main.final, 0.0, Status.CONVERGED if ok else Status.MAX_REFINEMENT, diag)


def _sampled_limit(f, p, weight, tol, x0, min_level, max_level) -> NormReport:
    if max_level - min_level < 2:
        raise ValueError("need at least three refinement levels")
    start = 0.0 if x0 is None else float(x0)

    def discretize(n):
        return _to_step(f, n), ExponentField.of(_to_step(p, n)), _to_step(weight, n)

    values = []
    level = min_level
    for level in range(min_level, max_level + 1):
        values.append(integrate_lp(*_as_args(discretize(2**level), start)).final)
        if len(values) >= 3 and abs(values[-1] - values[-2]) < tol:
            break
    residual = abs(values[-1] - values[-2])

    levels = range(level - 2, level + 1)
    starts = [start] * 3 if x0 is not None else [tol / 2, tol / 4, tol / 8]
    profiles = [integrate_lp(*_as_args(discretize(2**k), s)) for k, s in zip(levels, starts)]
    status = nonexistence_diagnostic(profiles)
    if status is Status.CONVERGED and not residual < tol:
        status = Status.MAX_REFINEMENT
    diag = {
        "x0": start,
        "grid": float(2**level),
        "grid_residual": residual,
        "max_step_increment": max(
            max_increment(pr, 0.05 * pr.final) if math.isfinite(pr.final) else math.inf
            for pr in profiles
        ),
    }
    return NormReport(values[-1], residual, status, diag)


def _as_args(discretized, x0):
    f, p, w = discretized
    return f, p, x0, w
