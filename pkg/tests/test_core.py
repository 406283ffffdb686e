import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lambertw

from odenorm.core import (ExponentField, GridFunction, StepFunction, boxplus, boxplus_all,
                          boxplus_chain, constant_a, dual_exponent, refine_common)

from strategies import step_functions

nonneg = st.floats(0, 1e6)
expo = st.floats(1, 200)


def test_step_function_validation():
    with pytest.raises(ValueError):
        StepFunction([0.0, 0.5], [1.0])
    with pytest.raises(ValueError):
        StepFunction([0.0, 0.6, 0.5, 1.0], [1, 2, 3])
    with pytest.raises(ValueError):
        StepFunction([0.0, 1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        StepFunction([0.0, 1.0], [float("nan")])


def test_step_function_evaluation():
    f = StepFunction([0, 0.25, 1], [3, 5])
    assert f(0.0) == 3 and f(0.25) == 5 and f(1.0) == 5
    assert np.array_equal(f(np.array([0.1, 0.9])), [3, 5])
    with pytest.raises(ValueError):
        f(1.5)
    assert f.integral() == pytest.approx(0.25 * 3 + 0.75 * 5)
    assert f.reflect()(0.1) == 5 and f.reflect()(0.9) == 3


def test_values_are_read_only():
    f = StepFunction.constant(2.0)
    with pytest.raises(ValueError):
        f.values[0] = 3.0


def test_exponent_field():
    p = ExponentField([0, 0.5, 1], [1, 3])
    assert (p.ess_inf, p.ess_sup) == (1, 3)
    assert not p.is_constant()
    with pytest.raises(ValueError):
        ExponentField.constant(0.5)
    with pytest.raises(ValueError):
        p.conjugate()
    assert np.allclose(p.conjugate(placeholder=2.0).values, [2.0, 1.5])
    assert ExponentField.of(2.0).is_constant()


def test_grid_function_exact_conversion():
    g = GridFunction([1.0, 2.0, 4.0, 8.0])
    s = g.to_step()
    assert np.array_equal(s.breakpoints, [0, 0.25, 0.5, 0.75, 1])
    assert np.array_equal(s.values, g.samples)
    h = GridFunction.from_callable(lambda t: t, 4)
    assert np.allclose(h.samples, [0.125, 0.375, 0.625, 0.875])


def test_boxplus_examples():
    assert boxplus(3, 4, 2) == pytest.approx(5, rel=1e-15)
    assert boxplus(2.5, 4.0, 1) == 6.5
    getcontext().prec = 40
    want = float((Decimal(2).ln() / 1000).exp())
    assert boxplus(1, 1, 1000) == pytest.approx(want, rel=1e-14)
    assert boxplus(1, 1, 1000) == pytest.approx(1.0006934, abs=1e-7)


def test_boxplus_domain_errors():
    for args in [(-1, 1, 2), (1, -1, 2), (1, 1, 0.5), (1, 1, math.inf)]:
        with pytest.raises(ValueError):
            boxplus(*args)


def test_boxplus_log_domain():
    # direct powers would overflow here
    assert boxplus(1e200, 1e200, 10) == pytest.approx(1e200 * 2 ** 0.1, rel=1e-14)
    assert boxplus(1e-200, 1e-200, 10) == pytest.approx(1e-200 * 2 ** 0.1, rel=1e-14)
    assert boxplus(3.0, 1.0, 1e4) == pytest.approx(3.0 * (1 + 3.0 ** -1e4) ** 1e-4)


@given(nonneg, nonneg, expo)
def test_boxplus_commutative_and_dominates(a, b, p):
    c = boxplus(a, b, p)
    assert c == boxplus(b, a, p)
    assert c >= max(a, b)
    assert boxplus(a, 0.0, p) == a


@given(nonneg, nonneg, nonneg, expo)
def test_boxplus_associative(a, b, c, p):
    lhs = boxplus(boxplus(a, b, p), c, p)
    rhs = boxplus(a, boxplus(b, c, p), p)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=0)


@given(nonneg, nonneg, nonneg, expo, expo)
def test_mixed_inequality(a, b, c, p, r):
    p, r = min(p, r), max(p, r)
    assert boxplus(a, boxplus(b, c, p), r) <= boxplus(boxplus(a, b, r), c, p) * (1 + 1e-13)


def test_boxplus_chain():
    assert boxplus_chain([1, 1, 1], [1, 2]) == pytest.approx(math.sqrt(5))
    assert boxplus_chain([0, 0, 0], [3, 4]) == 0
    xs = [1.0, 2.0, 3.0, 4.0]
    assert boxplus_chain(xs, [3] * 3) == pytest.approx(sum(x**3 for x in xs) ** (1 / 3))
    with pytest.raises(ValueError):
        boxplus_chain([1, 2], [2, 2])


def test_dual_exponent():
    assert dual_exponent(2) == 2
    assert dual_exponent(4 / 3) == pytest.approx(4)
    assert dual_exponent(1) == math.inf
    assert dual_exponent(dual_exponent(3.7)) == pytest.approx(3.7)
    with pytest.raises(ValueError):
        dual_exponent(0.9)


def test_constant_a_against_lambert_w():
    a = constant_a()
    assert 1 < a < 2
    assert a == pytest.approx(float(np.real(1 / lambertw(1.0))), rel=1e-14)
    assert a**a == pytest.approx(math.e, abs=1e-12)
    assert a == pytest.approx(1.763222834, abs=1e-9)


def test_refine_common_examples():
    f = StepFunction.constant(2.0)
    g = StepFunction([0, 0.5, 1], [1, 3])
    f2, g2 = refine_common(f, g)
    assert np.array_equal(f2.breakpoints, [0, 0.5, 1]) and np.array_equal(g2.breakpoints, [0, 0.5, 1])
    assert np.array_equal(f2.values, [2, 2])
    h, h2 = refine_common(g, g)
    assert np.array_equal(h.values, g.values)


@settings(max_examples=50)
@given(step_functions(), step_functions())
def test_refine_common_preserves_values(f, g):
    f2, g2 = refine_common(f, g)
    assert np.array_equal(f2.breakpoints, g2.breakpoints)
    ts = np.random.default_rng(0).uniform(0, 1, 1000)
    assert np.array_equal(f(ts), f2(ts)) and np.array_equal(g(ts), g2(ts))
    assert f2.same_as(f)


def test_arithmetic_and_indicator():
    f = StepFunction([0, 0.5, 1], [1, -2])
    g = StepFunction([0, 0.25, 1], [3, 4])
    s = f + g
    assert s(0.1) == 4 and s(0.3) == 5 and s(0.7) == 2
    assert (f * g)(0.7) == -8
    assert (2 * f)(0.7) == -4
    assert (f - f).is_zero()
    assert np.array_equal(f.indicator(lambda v: v < 0).values, [0, 1])
