"""Norm computations built on the ODE integrator, plus the comparison norms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (ExponentField, GridFunction, StepFunction, boxplus, boxplus_chain,
                   merge_breakpoints, refine_common)
from .ode import NormReport, Status, norm_limit

__all__ = [
    "CompositePartition",
    "NormReport",
    "Status",
    "composite_seminorm",
    "lp_norm",
    "modular",
    "nakano_norm",
    "sequence_norm",
    "sequence_partials",
    "weight_isometry",
]


def lp_norm(f, p, tol: float = 1e-8, weight=None, direction: str = "forward",
            x0: float | None = None) -> NormReport:
    """‖f‖_{p(.)} as phi_f(1); see :func:`odenorm.ode.norm_limit`."""
    if isinstance(f, GridFunction):
        f = f.to_step()
    if isinstance(p, GridFunction):
        p = p.to_step()
    return norm_limit(f, p, tol, weight, direction, x0=x0)


# -- composite semi-norms -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CompositePartition:
    """Cells [b_i, b_{i+1}) with inner exponents p_i and join exponents r_i.

    ``joins[i]`` is the exponent used to attach cell i + 1 to what precedes
    it, so there is one join fewer than there are cells.
    """

    breakpoints: np.ndarray
    inner: np.ndarray
    joins: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        inner = np.asarray(self.inner, dtype=float)
        joins = np.asarray(self.joins, dtype=float)
        # StepFunction does the breakpoint validation
        StepFunction(b, inner)
        if joins.size != inner.size - 1:
            raise ValueError(f"need {inner.size - 1} join exponents, got {joins.size}")
        if np.any(inner < 1) or np.any(joins < 1):
            raise ValueError("exponents must be >= 1")
        if np.any(joins < inner[1:]):
            raise ValueError("each join exponent must be >= the inner exponent of the cell it attaches")
        for name, arr in (("breakpoints", b), ("inner", inner), ("joins", joins)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def standard(cls, p: StepFunction) -> CompositePartition:
        return cls(p.breakpoints, p.values, p.values[1:])

    def is_standard(self) -> bool:
        return bool(np.array_equal(self.joins, self.inner[1:]))


def _cell_lp(lengths: np.ndarray, absf: np.ndarray, p: float) -> float:
    # (sum len * |f|^p)^(1/p), scaled by the largest |f| so the powers stay <= 1
    m = float(absf.max(initial=0.0))
    if m == 0:
        return 0.0
    s = math.fsum((lengths * (absf / m) ** p).tolist())
    return m * s ** (1.0 / p)


def composite_seminorm(f: StepFunction, part: CompositePartition, weight: StepFunction | None = None) -> float:
    """(...(|f|_{p1} ⊞_{r1} |f|_{p2}) ⊞_{r2} ...) with per-cell L^{p_i}(mu) norms.

    Each cell norm is a direct power sum, independent of the ODE recursion.
    """
    if weight is not None and np.any(weight.values <= 0):
        raise ValueError("weight must be positive")
    b = merge_breakpoints(f, weight, StepFunction(part.breakpoints, part.inner))
    absf = np.abs(f.refine(b).values)
    lengths = np.diff(b)
    if weight is not None:
        lengths = lengths * weight.refine(b).values
    owner = np.searchsorted(part.breakpoints, b[:-1], side="right") - 1
    norms = [
        _cell_lp(lengths[owner == i], absf[owner == i], p)
        for i, p in enumerate(part.inner.tolist())
    ]
    return boxplus_chain(norms, part.joins.tolist())


# -- Nakano --------------------------------------------------------------------


def modular(f: StepFunction, p, lam: float) -> float:
    """sum_i (len_i / p_i) (|f_i| / lam)^{p_i}, evaluated in the log domain.

    Returns ``math.inf`` when a term overflows.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    p = ExponentField.of(p)
    g, q = refine_common(f.abs(), p)
    nz = g.values > 0
    if not np.any(nz):
        return 0.0
    with np.errstate(divide="ignore", over="ignore"):
        logs = (np.log(g.lengths[nz]) - np.log(q.values[nz])
                + q.values[nz] * (np.log(g.values[nz]) - math.log(lam)))
    if np.any(logs > 709.0):
        return math.inf
    return math.fsum(np.exp(logs).tolist())


def nakano_norm(f: StepFunction, p, tol: float = 1e-12) -> float:
    """inf{lam > 0 : modular(f, p, lam) <= 1} by bisection.

    The bracket starts from ‖f‖_inf/(2e) and ‖f‖_inf and is widened
    geometrically; the upper end is returned, so the modular there is <= 1.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sup = f.sup_norm()
    if sup == 0:
        return 0.0
    p = ExponentField.of(p)
    lo, hi = sup / (2 * math.e), sup
    while modular(f, p, hi) > 1:
        lo, hi = hi, 2 * hi
    while modular(f, p, lo) <= 1:
        lo, hi = lo / 2, lo
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if modular(f, p, mid) > 1:
            lo = mid
        else:
            hi = mid
    return hi


# -- sequences and weights ------------------------------------------------------------


def sequence_partials(xs: Sequence[float], ps: Sequence[float]) -> list[float]:
    """Partial values of the left-nested ⊞ chain of |x_i|; nondecreasing."""
    if len(ps) < len(xs) - 1:
        raise ValueError(f"need at least {len(xs) - 1} exponents, got {len(ps)}")
    if not xs:
        return []
    acc = abs(float(xs[0]))
    out = [acc]
    for x, p in zip(xs[1:], ps):
        acc = boxplus(acc, abs(float(x)), float(p))
        out.append(acc)
    return out


def sequence_norm(xs: Sequence[float], ps: Sequence[float]) -> float:
    parts = sequence_partials(xs, ps)
    return parts[-1] if parts else 0.0


def weight_isometry(f: StepFunction, w: StepFunction, p) -> StepFunction:
    """t -> w(t)^(-1/p(t)) f(t), which maps L^{p(.)} isometrically onto L^{p(.)}(w dt)."""
    if np.any(w.values <= 0):
        raise ValueError("weight must be positive")
    p = ExponentField.of(p)
    b = merge_breakpoints(f, w, p)
    fv, wv, pv = (g.refine(b).values for g in (f, w, p))
    return StepFunction(b, wv ** (-1.0 / pv) * fv)
