"""The duality map J, Hölder pairings and the log-derivative invariant iota."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ExponentField, StepFunction, merge_breakpoints, refine_common
from .ode import integrate_lp
from .norms import lp_norm

# Conjugate exponent assigned to p = 1 cells where the dual side vanishes; its
# value never enters a computation.
_UNUSED_CONJUGATE = 2.0


@dataclass(frozen=True, eq=False)
class DualPair:
    f: StepFunction
    p: ExponentField
    jf: StepFunction
    pstar: ExponentField


@dataclass(frozen=True)
class HolderResult:
    pairing: float
    bound: float
    holds: bool


@dataclass(frozen=True)
class PairingCheck:
    lhs: float
    rhs: float
    gap: float


@dataclass(frozen=True, eq=False)
class IotaEstimate:
    """Per-cell estimates of d log phi_{Jf} / d log phi_f; NaN on excluded cells."""

    breakpoints: np.ndarray
    values: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def to_step(self, fill: float = 0.0) -> StepFunction:
        return StepFunction(self.breakpoints, np.where(self.valid, self.values, fill))


def duality_map(f: StepFunction, p) -> StepFunction:
    """sign(f)|f|^{p-1}, i.e. sign(f)|f|^{p/p*}."""
    p = ExponentField.of(p)
    g, q = refine_common(f, p)
    if np.any((q.values == 1.0) & (g.values != 0)):
        raise ValueError("duality map needs p > 1 wherever f != 0")
    return StepFunction(g.breakpoints, np.sign(g.values) * np.abs(g.values) ** (q.values - 1.0))


def dual_pair(f: StepFunction, p) -> DualPair:
    p = ExponentField.of(p)
    jf = duality_map(f, p)
    return DualPair(f, p, jf, _conjugate_where_needed(p, jf))


def _conjugate_where_needed(p: ExponentField, g: StepFunction) -> ExponentField:
    q, h = refine_common(p, g)
    if np.any((q.values == 1.0) & (h.values != 0)):
        raise ValueError("conjugate exponent is infinite on a cell where g != 0")
    return ExponentField.of(q).conjugate(placeholder=_UNUSED_CONJUGATE)


def pairing_integral(f: StepFunction, g: StepFunction) -> float:
    a, b = refine_common(f, g)
    return math.fsum((a.lengths * np.abs(a.values * b.values)).tolist())


def holder_pair(f: StepFunction, g: StepFunction, p, tol: float = 1e-8) -> HolderResult:
    """∫|fg| against ‖f‖_{p(.)} ‖g‖_{p*(.)}."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = ExponentField.of(p)
    pstar = _conjugate_where_needed(p, g)
    pairing = pairing_integral(f, g)
    bound = lp_norm(f, p, tol).value * lp_norm(g, pstar, tol).value
    return HolderResult(pairing, bound, pairing <= bound + 4 * tol)


def _constant_on_support(f: StepFunction, p: ExponentField) -> float | None:
    g, q = refine_common(f, p)
    on = q.values[g.values != 0]
    if on.size == 0:
        return None
    if not np.all(on == on[0]):
        raise ValueError("p is not constant on the support of f; pairing equality is not certified")
    return float(on[0])


def pairing_equality_check(f: StepFunction, p, tol: float = 1e-8) -> PairingCheck:
    """<f, J(f)> against ‖f‖ ‖J(f)‖_*, for p constant on the support of f."""
    p = ExponentField.of(p)
    if _constant_on_support(f, p) is None:
        return PairingCheck(0.0, 0.0, 0.0)
    pair = dual_pair(f, p)
    lhs = pairing_integral(f, pair.jf)
    rhs = lp_norm(f, p, tol).value * lp_norm(pair.jf, pair.pstar, tol).value
    return PairingCheck(lhs, rhs, abs(lhs - rhs))


def iota_invariant(f: StepFunction, p, grid: int = 64, x0: float | None = None,
                   min_dlog: float = 1e-8) -> IotaEstimate:
    """Difference-quotient estimate of iota = d log phi_{Jf} / d log phi_f per cell.

    Both profiles live on the merged breakpoints of f and p refined by a
    uniform grid.  Initial values are coupled by phi_{Jf}(0) = phi_f(0)^{p(0)-1};
    the default phi_f(0) is 1e-3 ‖f‖_inf.  Cells with f = 0 are excluded, and so
    are cells where log phi_f grows by less than ``min_dlog``: there the
    quotient is dominated by rounding.
    """
    p = ExponentField.of(p)
    pair = dual_pair(f, p)
    b = np.union1d(merge_breakpoints(f, p), np.linspace(0.0, 1.0, grid + 1))
    if x0 is None:
        x0 = 1e-3 * f.sup_norm()
    if x0 <= 0:
        raise ValueError("iota needs a positive initial value (or a nonzero f)")
    y0 = x0 ** (p(0.0) - 1.0)
    phi = integrate_lp(f.refine(b), p, x0)
    psi = integrate_lp(pair.jf.refine(b), pair.pstar, y0)
    dlog_f = np.diff(np.log(phi.phis))
    dlog_j = np.diff(np.log(psi.phis))
    with np.errstate(divide="ignore", invalid="ignore"):
        est = dlog_j / dlog_f
    excluded = (f.refine(b).values == 0) | (dlog_f < min_dlog)
    return IotaEstimate(b, np.where(excluded | ~np.isfinite(est), np.nan, est))
