"""Step functions, the two-term power mean and a few universal constants.

Every function on [0, 1] handled by the library is ultimately a
:class:`StepFunction`: a strictly increasing breakpoint vector starting at 0
and ending at 1, plus one value per cell ``[b_i, b_{i+1})`` (the last cell is
closed).  Closures and sampled data are brought into this form through
:class:`GridFunction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cache
from typing import Callable, Iterable, Sequence

import numpy as np

# Direct powers are used only while p <= LOG_DOMAIN_P and p*|log x| stays below
# LOG_DOMAIN_EXP for both arguments; otherwise the power mean goes through logs.
LOG_DOMAIN_P = 64.0
LOG_DOMAIN_EXP = 600.0

INF = math.inf


def _as_readonly(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Exact piecewise-constant function on [0, 1]."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = _as_readonly(self.breakpoints)
        v = _as_readonly(self.values)
        if b.ndim != 1 or v.ndim != 1:
            raise ValueError("breakpoints and values must be one-dimensional")
        if b.size < 2:
            raise ValueError("need at least two breakpoints")
        if b[0] != 0.0 or b[-1] != 1.0:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if not np.all(np.diff(b) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if v.size != b.size - 1:
            raise ValueError(
                f"expected {b.size - 1} values for {b.size} breakpoints, got {v.size}"
            )
        if np.any(np.isnan(v)):
            raise ValueError("values must not be NaN")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    # -- construction -------------------------------------------------------

    @classmethod
    def constant(cls, c: float):
        return cls([0.0, 1.0], [c])

    @classmethod
    def uniform(cls, values: Sequence[float]):
        """Step function with ``len(values)`` equal cells."""
        n = len(values)
        return cls(np.linspace(0.0, 1.0, n + 1), values)

    # -- evaluation ----------------------------------------------------------

    def __call__(self, t):
        idx = self.cell_index(t)
        out = self.values[idx]
        return float(out) if np.ndim(out) == 0 else out

    def cell_index(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < 0.0) | (t > 1.0)):
            raise ValueError("evaluation point outside [0, 1]")
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return np.clip(idx, 0, self.values.size - 1)

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return (
            f"{type(self).__name__}(breakpoints={self.breakpoints.tolist()}, "
            f"values={self.values.tolist()})"
        )

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def integral(self) -> float:
        return math.fsum(self.lengths * self.values)

    # -- transformations -----------------------------------------------------

    def refine(self, breakpoints: Iterable[float]):
        """Same function written on a finer breakpoint set.

        ``breakpoints`` must contain every existing breakpoint.
        """
        b = np.asarray(breakpoints, dtype=float)
        if not np.all(np.isin(self.breakpoints, b)):
            raise ValueError("refinement must keep every existing breakpoint")
        mids = 0.5 * (b[:-1] + b[1:])
        return self._rebuild(b, self.values[self.cell_index(mids)])

    def _rebuild(self, breakpoints, values):
        return type(self)(breakpoints, values)

    def map(self, func: Callable[[np.ndarray], np.ndarray]) -> StepFunction:
        return StepFunction(self.breakpoints, func(self.values))

    def abs(self) -> StepFunction:
        return self.map(np.abs)

    def reflect(self):
        """t -> self(1 - t)."""
        return self._rebuild(1.0 - self.breakpoints[::-1], self.values[::-1])

    def with_subdivision(self, n: int):
        """Refine by the uniform grid with ``n`` cells."""
        return self.refine(np.union1d(self.breakpoints, np.linspace(0.0, 1.0, n + 1)))

    def indicator(self, mask: Callable[[np.ndarray], np.ndarray]) -> StepFunction:
        """0/1 step function of the cells where ``mask(values)`` holds."""
        return StepFunction(self.breakpoints, np.where(mask(self.values), 1.0, 0.0))

    def __mul__(self, other):
        if isinstance(other, StepFunction):
            a, b = refine_common(self, other)
            return StepFunction(a.breakpoints, a.values * b.values)
        return StepFunction(self.breakpoints, self.values * float(other))

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, StepFunction):
            a, b = refine_common(self, other)
            return StepFunction(a.breakpoints, a.values + b.values)
        return StepFunction(self.breakpoints, self.values + float(other))

    def __neg__(self):
        return StepFunction(self.breakpoints, -self.values)

    def __sub__(self, other):
        return self + (-other)

    def same_as(self, other: StepFunction) -> bool:
        """Pointwise equality, independent of how each side is partitioned."""
        a, b = refine_common(self, other)
        return bool(np.array_equal(a.values, b.values))


class ExponentField(StepFunction):
    """A step exponent p(.) with every value in [1, inf)."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.values < 1.0) or not np.all(np.isfinite(self.values)):
            raise ValueError("exponent values must be finite and >= 1")
        object.__setattr__(self, "_ess_inf", float(self.values.min()))
        object.__setattr__(self, "_ess_sup", float(self.values.max()))

    @classmethod
    def of(cls, p) -> ExponentField:
        """Coerce a number or a StepFunction into an exponent."""
        if isinstance(p, ExponentField):
            return p
        if isinstance(p, StepFunction):
            return cls(p.breakpoints, p.values)
        if isinstance(p, GridFunction):
            s = p.to_step()
            return cls(s.breakpoints, s.values)
        return cls.constant(float(p))

    @property
    def ess_inf(self) -> float:
        return self._ess_inf

    @property
    def ess_sup(self) -> float:
        return self._ess_sup

    def is_constant(self) -> bool:
        return self._ess_inf == self._ess_sup

    def conjugate(self, placeholder: float | None = None) -> ExponentField:
        """Pointwise conjugate exponent p/(p-1).

        Cells with p = 1 have conjugate +inf, which is not a valid exponent
        value; they receive ``placeholder`` or a ValueError is raised.
        """
        ones = self.values == 1.0
        if np.any(ones) and placeholder is None:
            raise ValueError("p = 1 on some cell; conjugate exponent is infinite there")
        with np.errstate(divide="ignore"):
            pstar = np.where(ones, placeholder if placeholder is not None else 1.0,
                             self.values / (self.values - 1.0))
        return ExponentField(self.breakpoints, pstar)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples on the uniform grid; sample i lives on [i/n, (i+1)/n)."""

    samples: np.ndarray

    def __post_init__(self):
        s = _as_readonly(self.samples)
        if s.ndim != 1 or s.size < 1:
            raise ValueError("GridFunction needs at least one sample")
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.size

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], n: int) -> GridFunction:
        """Sample ``func`` at the cell midpoints of the n-cell grid."""
        mids = (np.arange(n) + 0.5) / n
        return cls(np.broadcast_to(np.asarray(func(mids), dtype=float), (n,)))

    def to_step(self) -> StepFunction:
        return StepFunction.uniform(self.samples)


# -- the two-term power mean ---------------------------------------------------


def boxplus(a: float, b: float, p: float) -> float:
    """a ⊞_p b = (a^p + b^p)^(1/p) for a, b >= 0 and 1 <= p < inf.

    Switches to the scaled log-domain form max * exp(log1p(r^p) / p), r <= 1,
    when p or the magnitudes of a, b would put direct powers at risk.
    """
    if a < 0 or b < 0:
        raise ValueError(f"boxplus needs nonnegative arguments, got {a}, {b}")
    if not p >= 1 or math.isinf(p):
        raise ValueError(f"boxplus needs 1 <= p < inf, got {p}")
    if b == 0:
        return float(a)
    if a == 0:
        return float(b)
    if p == 1:
        return a + b
    hi, lo = (a, b) if a >= b else (b, a)
    if p <= LOG_DOMAIN_P and p * max(abs(math.log(hi)), abs(math.log(lo))) < LOG_DOMAIN_EXP:
        out = (a**p + b**p) ** (1.0 / p)
    else:
        # log r <= 0, so exp(p log r) cannot overflow
        out = hi * math.exp(math.log1p(math.exp(p * (math.log(lo) - math.log(hi)))) / p)
    # rounding must not push the result below the larger argument
    return max(out, hi)


def boxplus_chain(xs: Sequence[float], ps: Sequence[float]) -> float:
    """Left fold (...(x1 ⊞_{p1} x2) ⊞_{p2} x3 ...)."""
    if len(ps) != len(xs) - 1:
        raise ValueError(f"need {len(xs) - 1} exponents for {len(xs)} terms, got {len(ps)}")
    if not xs:
        return 0.0
    acc = float(xs[0])
    if acc < 0:
        raise ValueError("boxplus_chain needs nonnegative terms")
    for x, p in zip(xs[1:], ps):
        acc = boxplus(acc, x, p)
    return acc


def boxplus_all(xs: Iterable[float], p: float) -> float:
    """⊞^p over all terms, i.e. the l^p norm of a nonnegative vector."""
    acc = 0.0
    for x in xs:
        acc = boxplus(acc, float(x), p)
    return acc


def dual_exponent(p: float) -> float:
    """Conjugate exponent p/(p-1); p = 1 maps to ``math.inf``."""
    if not p >= 1:
        raise ValueError(f"exponent must be >= 1, got {p}")
    if p == 1:
        return INF
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@cache
def constant_a() -> float:
    """The root of a·ln(a) = 1 in (1, 2), i.e. a^a = e."""
    a = 1.75
    for _ in range(50):
        step = (a * math.log(a) - 1.0) / (math.log(a) + 1.0)
        a -= step
        if abs(step) < 1e-16 * a:
            break
    return a


def refine_common(f: StepFunction, g: StepFunction) -> tuple[StepFunction, StepFunction]:
    """Rewrite f and g on the sorted union of their breakpoints."""
    b = np.union1d(f.breakpoints, g.breakpoints)
    return f.refine(b), g.refine(b)


def merge_breakpoints(*fs: StepFunction | None) -> np.ndarray:
    b = np.array([0.0, 1.0])
    for f in fs:
        if f is not None:
            b = np.union1d(b, f.breakpoints)
    return b
