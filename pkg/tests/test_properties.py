"""Property-based checks of the structural invariants the synthesis relies
on: closed forms for the first worked example, monotonicity of the budget
curve, and budget bookkeeping in the integrator."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from peakctl import (Domain, State, budget_L, builtin, integrate,
                     uncontrolled_arc, x_bar, x_h)
from peakctl.models import PlanarModel

EX1 = builtin("example1")


def ex1_y0max(x0, y0):
    return 1.0 / (x0 + 1.0) + math.log(x0 + 1.0) - 1.0 + y0


@settings(max_examples=20, deadline=None)
@given(x0=st.floats(0.3, 3.0), y0=st.floats(0.3, 3.0))
def test_uncontrolled_peak_closed_form(x0, y0):
    y0max, _ = uncontrolled_arc(EX1, State(x0, y0))
    assert y0max == pytest.approx(ex1_y0max(x0, y0), abs=1e-7)


@settings(max_examples=15, deadline=None)
@given(frac=st.floats(0.02, 0.98))
def test_budget_closed_form_at_any_level(frac):
    y0max, arc = uncontrolled_arc(EX1, State(2.0, 2.0))
    ybar = 2.0 + frac * (y0max - 2.0)
    L = budget_L(EX1, ybar, x_h(EX1, ybar), x_bar(arc, ybar))
    assert L == pytest.approx(y0max / ybar - 1.0, abs=1e-8)


@settings(max_examples=15, deadline=None)
@given(fa=st.floats(0.05, 0.9), gap=st.floats(0.02, 0.5))
def test_budget_strictly_decreasing(fa, gap):
    y0max, arc = uncontrolled_arc(EX1, State(2.0, 2.0))
    span = y0max - 2.0
    ya = 2.0 + fa * span
    yb = min(2.0 + (fa + gap) * span, y0max - 1e-6 * span)
    La = budget_L(EX1, ya, x_h(EX1, ya), x_bar(arc, ya))
    Lb = budget_L(EX1, yb, x_h(EX1, yb), x_bar(arc, yb))
    assert La > Lb


@settings(max_examples=20, deadline=None)
@given(m=st.floats(0.05, 0.8), y=st.floats(0.1, 3.0))
def test_contois_switching_abscissa_closed_form(m, y):
    # m is kept away from 1 so the root y m/(1-m) stays inside the
    # default bracket-scan range (beyond it, x_h raises NoBracket)
    model = builtin("contois", {"m": m})
    assert x_h(model, y) == pytest.approx(y * m / (1.0 - m), rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(u=st.floats(0.0, 1.0), t_end=st.floats(0.1, 5.0))
def test_spent_equals_control_times_time(u, t_end):
    # with g = 0 the control does nothing to the state, only to the meter
    m = PlanarModel(name="meter",
                    f1=lambda x, y: -x, f2=lambda x, y: -y,
                    g1=lambda x, y: 0.0, g2=lambda x, y: 0.0,
                    domain=Domain())
    tr = integrate(m, lambda s: u, State(1.0, 1.0), horizon=t_end)
    assert tr.total_spent == pytest.approx(u * t_end, abs=1e-9)


@settings(max_examples=10, deadline=None)
@given(x0=st.floats(0.5, 2.5), y0=st.floats(0.5, 2.5))
def test_peak_is_attained_on_switching_set(x0, y0):
    y0max, arc = uncontrolled_arc(EX1, State(x0, y0))
    # the y-maximum of the coast is its endpoint, on f2 = 0
    assert y0max == pytest.approx(arc.peak_y)
    assert abs(EX1.f2(float(arc.x[-1]), float(arc.y[-1]))) < 1e-8
