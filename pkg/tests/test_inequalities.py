import numpy as np
import pytest
from hypothesis import given, strategies as st

from fixedtime_etc.inequalities import (
    TANH_GAP_FACTOR,
    tanh_gap,
    young_bound,
    young_bound_printed,
    young_product,
)

pos = st.floats(1e-3, 1e3)


@given(st.floats(-1e4, 1e4), pos)
def test_tanh_gap_bounds(e1, e2):
    g = float(tanh_gap(e1, e2))
    assert -1e-12 <= g <= TANH_GAP_FACTOR * e2 + 1e-12 * max(1.0, e2)


def test_tanh_gap_constant_is_tight():
    # the maximiser of |s| - s tanh(s) sits near s = 1.2785
    s = np.linspace(0, 5, 200001)
    peak = float(np.max(tanh_gap(s, 1.0)))
    assert peak == pytest.approx(0.2785, abs=1e-4)
    assert peak <= TANH_GAP_FACTOR


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.05, 4), st.floats(0.05, 4), st.floats(0.05, 20))
def test_weighted_young(x, y, r1, r2, r3):
    lhs = young_product(x, y, r1, r2)
    rhs = young_bound(x, y, r1, r2, r3)
    assert lhs <= rhs + 1e-12 * max(1.0, rhs)


def test_weighted_young_equality_case():
    # equality when r3 |x|^s = r3^(-r1/r2) |y|^s
    x, r1, r2, r3 = 1.3, 0.7, 1.9, 2.0
    s = r1 + r2
    y = (r3 ** (1 + r1 / r2)) ** (1 / s) * x
    assert young_product(x, y, r1, r2) == pytest.approx(young_bound(x, y, r1, r2, r3), rel=1e-12)


def test_printed_coefficients_admit_a_counterexample():
    lhs = young_product(1.0, 1.0, 0.1, 0.1)
    rhs = young_bound_printed(1.0, 1.0, 0.1, 0.1, 1.0)
    assert rhs == pytest.approx(0.55)
    assert lhs > rhs
