import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mkdv_lab.fitting import linear_fit, loglog_fit, no_growth, tail_loglog_fit


@given(st.floats(-3, 3), st.floats(-5, 5))
def test_exact_power_law_recovered(p, logc):
    t = np.linspace(1, 100, 30)
    fit = loglog_fit(t, np.exp(logc) * t**p)
    assert fit.slope == pytest.approx(p, abs=1e-9)
    assert fit.intercept == pytest.approx(logc, abs=1e-8)


def test_constant_data():
    fit = linear_fit([0, 1, 2], [4.0, 4.0, 4.0])
    assert (fit.slope, fit.intercept, fit.r2) == (0.0, 4.0, 1.0)


def test_too_few_points():
    with pytest.raises(ValueError):
        linear_fit([1.0], [2.0])
    assert linear_fit([0, 1], [0, 1]).slope_interval() == (-np.inf, np.inf)


def test_tail_fit_ignores_early_transient():
    t = np.linspace(1, 100, 200)
    v = np.where(t < 40, 1e3, 1.0) * t**-2.0
    assert tail_loglog_fit(t, v, 0.5).slope == pytest.approx(-2.0)


def test_nonpositive_values_dropped():
    t = np.array([1.0, 2.0, 3.0, 4.0])
    assert loglog_fit(t, [1.0, 0.0, 1 / 9, 1 / 16]).slope == pytest.approx(-2.0)


def test_no_growth():
    rng = np.random.default_rng(1)
    t = np.linspace(1, 50, 40)
    assert no_growth(t, t**-0.3 * np.exp(0.01 * rng.standard_normal(t.size)))
    assert not no_growth(t, t**0.5)
