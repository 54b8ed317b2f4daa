import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vrslicing.errors import InfeasibleError, SlicingError
from vrslicing.perception import JndTargets, eta1_for_jnd, eta2_feasible_range, integrated_jnd

SQRT2 = math.sqrt(2.0)


def test_integrated_jnd_symmetric_case():
    assert integrated_jnd(0.9, 0.9) == pytest.approx(0.1 / SQRT2, rel=1e-12)


def test_integrated_jnd_example():
    assert integrated_jnd(0.98995, 0.9) == pytest.approx(0.01, rel=1e-3)


def test_integrated_jnd_perfect_link_limit():
    assert integrated_jnd(1 - 1e-12, 0.9) < 1e-11


@given(st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6))
def test_integrated_jnd_below_both_error_rates(e1, e2):
    g = integrated_jnd(e1, e2)
    assert g < min(1 - e1, 1 - e2) * (1 + 1e-12)
    assert g == integrated_jnd(e2, e1)


def test_eta1_examples():
    assert eta1_for_jnd(1e-2, 0.9) == pytest.approx(1 - (1e4 - 100) ** -0.5, rel=1e-14)
    assert eta1_for_jnd(1e-2, 0.9) == pytest.approx(0.98995, abs=1e-6)
    assert eta1_for_jnd(1e-4, 0.9) == pytest.approx(1 - 1.0000e-4, abs=1e-8)


def test_eta1_boundary_equals_eta2():
    theta = 1e-2
    eta2 = 1 - theta * SQRT2
    assert eta1_for_jnd(theta, eta2) == eta2


def test_eta1_rejects_infeasible_with_named_bound():
    with pytest.raises(InfeasibleError, match="theta"):
        eta1_for_jnd(0.2, 0.9)
    with pytest.raises(InfeasibleError, match="sqrt"):
        eta1_for_jnd(0.08, 0.9)
    with pytest.raises(SlicingError):
        eta1_for_jnd(0.01, 1.0)


@given(st.floats(1e-6, 0.05), st.floats(0.01, 0.999))
@settings(max_examples=200)
def test_round_trip_and_ordering(theta, frac):
    hi = 1 - theta * SQRT2
    eta2 = frac * hi
    eta1 = eta1_for_jnd(theta, eta2)
    assert integrated_jnd(eta1, eta2) == pytest.approx(theta, rel=1e-10)
    assert eta1 > eta2


@given(st.floats(1e-3, 0.02), st.floats(0.1, 0.9))
def test_eta1_monotone(theta, frac):
    eta2 = frac * (1 - theta * SQRT2)
    e = eta1_for_jnd(theta, eta2)
    assert eta1_for_jnd(theta, eta2 + 1e-4 * (1 - eta2)) < e
    assert eta1_for_jnd(theta * 1.01, eta2) < e


def test_feasible_range_examples():
    iv = eta2_feasible_range(1e-2, 0.9)
    assert iv.lo == 0.9 and iv.hi == pytest.approx(0.98586, abs=1e-5)
    assert 0.95 in iv and 0.99 not in iv
    assert eta2_feasible_range(0.1, 0.9).empty
    assert eta2_feasible_range(1e-15, 0.9).hi == pytest.approx(1.0)


def test_targets_validation():
    assert JndTargets(1e-2).feasible
    assert not JndTargets(0.1).feasible
    with pytest.raises(SlicingError):
        JndTargets(0.0)
    with pytest.raises(SlicingError):
        JndTargets(1e-2, 1.0)
