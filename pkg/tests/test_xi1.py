import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xifunc import oracle, xi1
from xifunc.errors import CalibrationError, DomainError, ParameterError
from xifunc.xi1 import Normalization


def test_paper_mode_value_at_zero():
    assert xi1.xi1_series(0, 0.0).value == 0.5
    assert xi1.xi1_series(3, 0.0).value == 0.0


def test_calibrated_constant_is_pi():
    c = xi1.default_calibration(1)
    assert c.constant == pytest.approx(math.pi, rel=1e-12)
    assert c.spread < 1e-6
    assert xi1.xi1_series(0, 0.0, norm="calibrated").value == pytest.approx(math.pi / 2, rel=1e-12)


def test_normalization_validation():
    with pytest.raises(ParameterError):
        Normalization("paper", 2.0)
    with pytest.raises(ParameterError):
        Normalization("other", 1.0)
    with pytest.raises(ParameterError):
        xi1.resolve("bogus")


def test_domain_checks():
    with pytest.raises(DomainError):
        xi1.xi1_series(0, 1.0)
    with pytest.raises(DomainError):
        xi1.xi1_series(0, -0.1)
    with pytest.raises(ParameterError):
        xi1.xi1_series(-1, 0.5)


def test_tau_coefficients_match_legendre_expansion():
    for k in range(5):
        assert list(xi1.tau_coefficients(k, 24).taus) == oracle.xi1_maclaurin_exact(k, 24)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10), st.floats(0.05, 0.95))
def test_series_matches_oracle(k, x):
    ref = oracle.xi_reference(oracle.XiOrder.of(k), x)
    val = xi1.xi1_series(k, x, norm="calibrated").value
    assert val == pytest.approx(ref.value, rel=1e-9)


def test_vectorised_matches_scalar_including_near_one():
    xs = np.array([0.0, 0.2, 0.6, 0.9, 0.99, 0.9999])
    for k in (0, 1, 4):
        v = xi1.xi1_values(k, xs)
        for x, vi in zip(xs, v):
            assert vi == pytest.approx(xi1.xi1_series(k, float(x)).value, rel=1e-12, abs=1e-300)


def test_derivatives_match_finite_differences():
    h = 1e-5
    for k in (0, 2):
        d, ok = xi1.xi1_derivatives(k, 0.4, 2)
        assert ok
        f = lambda x: xi1.xi1_series(k, x).value
        assert d[1] == pytest.approx((f(0.4 + h) - f(0.4 - h)) / (2 * h), rel=1e-8)
        assert d[2] == pytest.approx((f(0.4 + h) - 2 * f(0.4) + f(0.4 - h)) / h ** 2, rel=1e-5)


@pytest.mark.parametrize("k", [0, 1, 5, 10])
def test_second_order_equation_holds(k):
    for x in (0.1, 0.5, 0.9):
        r = xi1.xi1_ode_residual(k, x)
        assert r.converged and r.value < 1e-12


def test_variant_first_derivative_coefficient_fails_detectably():
    worst = max(xi1.xi1_ode_residual(k, x, form="variant").value
                for k in (0, 3) for x in (0.3, 0.6))
    assert worst > 1e-3


def test_diffdiff_relation_holds():
    for k in (0, 3, 8):
        for x in (0.2, 0.7):
            assert xi1.xi1_diffdiff_residual(k, x).value < 1e-12


def test_calibration_requires_enough_pairs():
    with pytest.raises(ParameterError):
        xi1.calibrate_normalization(1, (0.2, 0.4), (0, 1))


def test_calibration_detects_non_constant_ratio(monkeypatch):
    # pretend the oracle disagrees by an x-dependent factor
    real = oracle.xi_reference

    def skewed(order, x, spec=None):
        r = real(order, x, spec)
        return r.__class__(r.value * (1 + x), r.abs_error, r.terms_used, r.converged)

    monkeypatch.setattr(oracle, "xi_reference", skewed)
    with pytest.raises(CalibrationError):
        xi1.calibrate_normalization(1, (0.2, 0.4, 0.6), (0, 1))
