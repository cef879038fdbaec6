import math
from fractions import Fraction

import numpy as np
import pytest

from xifunc import oracle, xi1, xi2
from xifunc.errors import DomainError, ParameterError
from xifunc.oracle import QuadratureSpec, XiOrder


def test_quadrature_spec_validation():
    with pytest.raises(ParameterError):
        QuadratureSpec(nodes_per_panel=2)
    with pytest.raises(ParameterError):
        QuadratureSpec(tol=0)


def test_xi_order_is_sorted_and_zero():
    o = XiOrder.of(3, 1)
    assert o.orders == (1, 3) and o.rank == 2
    assert o.zero().is_zero and not o.is_zero


def test_integrate_1d_log_singularity():
    r = oracle.integrate_1d(lambda t: np.log(t), 0.0, 1.0, QuadratureSpec(tol=1e-12), [1e-6])
    assert r.converged
    assert r.value == pytest.approx(-1.0, abs=1e-10)


def test_integrate_2d_product():
    r = oracle.integrate_2d(lambda a, b: np.cos(a) ** 2 * np.cos(b) ** 2,
                            ((0.0, math.pi), (0.0, math.pi)), QuadratureSpec())
    assert r.value == pytest.approx(math.pi ** 2 / 4, rel=1e-12)


def test_xi_direct_at_zero():
    assert oracle.xi_direct(XiOrder.of(0), 0.0).value == pytest.approx(math.pi / 2, rel=1e-14)
    assert oracle.xi_direct(XiOrder.of(0, 0), 0.0).value == pytest.approx(math.pi ** 2 / 4, rel=1e-13)
    assert abs(oracle.xi_direct(XiOrder.of(2), 0.0).value) < 1e-14


def test_xi_direct_rejects_x_at_one():
    with pytest.raises(DomainError):
        oracle.xi_direct(XiOrder.of(0), 1.0)


def test_reference_resolves_small_values():
    r = oracle.xi_reference(XiOrder.of(6, 6), 0.1)
    assert r.converged
    assert r.value == pytest.approx(xi2.xi2_series((6, 6), 0.1).value, rel=1e-10)


def test_trapezoid_and_gauss_agree():
    a = oracle.xi_direct(XiOrder.of(1, 2), 0.6)
    b = oracle.xi_direct(XiOrder.of(1, 2), 0.6, digits=20)
    assert a.value == pytest.approx(b.value, rel=1e-12)


def test_z_direct_symmetric_and_at_origin():
    o = XiOrder.of(1)
    assert oracle.z_direct(o, 1.0, 0.4).value == pytest.approx(oracle.z_direct(o, 0.4, 1.0).value,
                                                               rel=1e-13)
    # rho = 0, r = 1: 2 * Xi_1^[0](0) = pi
    assert oracle.z_direct(XiOrder.of(0), 1.0, 0.0).value == pytest.approx(math.pi, rel=1e-13)


def test_a_direct_example():
    assert oracle.a_direct(2, 1, 1).value == pytest.approx(math.pi ** 2 / 2, rel=1e-13)
    assert oracle.a_expansion_exact(2, 1, 1) == Fraction(1, 2)


def test_psi_cyl_examples():
    assert abs(oracle.psi_cyl(oracle.CylindricalParams(1, 0.5, 0.0)).value) < 1e-14
    v = oracle.psi_cyl(oracle.CylindricalParams(0, 0.5, 0.0)).value
    assert v == pytest.approx(2 * math.pi / math.sqrt(1.25), rel=1e-13)
    with pytest.raises(DomainError):
        oracle.CylindricalParams(0, 0.0, 1.0)


def test_cos_power_moment():
    assert oracle.cos_power_moment(2, 0) == Fraction(1, 2)
    assert oracle.cos_power_moment(3, 0) == 0
    assert oracle.cos_power_moment(1, 2) == 0


def test_maclaurin_coefficients_match_series():
    c = oracle.xi1_maclaurin_exact(1, 20)
    x = 0.3
    approx = math.pi * sum(float(v) * x ** n for n, v in enumerate(c))
    assert approx == pytest.approx(xi1.xi1_series(1, x, norm="calibrated").value, rel=1e-9)
