"""Variable-exponent Lebesgue norms computed as solutions of a first-order ODE."""

from .core import (
    ExponentField,
    GridFunction,
    StepFunction,
    boxplus,
    boxplus_all,
    boxplus_chain,
    constant_a,
    dual_exponent,
    refine_common,
)
from .ode import NormReport, SolutionProfile, Status, integrate_lp, integrate_upsilon, norm_limit

__version__ = "0.1.0"
