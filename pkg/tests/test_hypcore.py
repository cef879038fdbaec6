import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xifunc import hypcore
from xifunc.errors import ParameterError
from xifunc.hypcore import PfqParams


def agm(a, b):
    while abs(a - b) > 1e-16 * a:
        a, b = (a + b) / 2, math.sqrt(a * b)
    return a


def test_pochhammer_basic():
    assert hypcore.pochhammer(0.5, 0) == 1
    assert hypcore.pochhammer(Fraction(1, 2), 3) == Fraction(15, 8)
    assert hypcore.pochhammer(-2, 3) == 0
    with pytest.raises(ParameterError):
        hypcore.pochhammer(1, -1)


def test_2f1_complete_elliptic_integral():
    # 2F1(1/2,1/2;1;m) = (2/pi) K(m) = 1/agm(1, sqrt(1-m))
    r = hypcore.pfq(PfqParams((0.5, 0.5), (1.0,), 0.25))
    assert r.converged
    assert r.value == pytest.approx(1 / agm(1.0, math.sqrt(0.75)), rel=1e-14)


@pytest.mark.parametrize("z", [0.8, 0.95, 0.999])
def test_2f1_near_one_matches_mpmath(z):
    for a, b, c in ((0.5, 1.5, 2.0), (0.5, 0.5, 1.0), (0.3, 0.7, 1.6)):
        r = hypcore.pfq(PfqParams((a, b), (c,), z))
        assert r.converged
        assert r.value == pytest.approx(float(mpmath.hyp2f1(a, b, c, z)), rel=1e-13)


def test_terminating_series_exact():
    # 2F1(-n, b; c; 1) = (c-b)_n / (c)_n (Chu-Vandermonde)
    n, b, c = 6, Fraction(3, 2), Fraction(7, 3)
    v = hypcore.pfq_terminating_exact(PfqParams((-n, b), (c,), 1))
    assert v == hypcore.pochhammer(c - b, n) / hypcore.pochhammer(c, n)
    assert hypcore.pfq(PfqParams((-n, 1.5), (7 / 3,), 1.0)).value == pytest.approx(float(v))


def test_denominator_pole_rejected_unless_terminated_first():
    with pytest.raises(ParameterError):
        PfqParams((0.5,), (-2,), 0.1)
    PfqParams((-1, 0.5), (-2,), 0.1)
    with pytest.raises(ParameterError):
        PfqParams((1, 1, 1, 1, 1), (1,), 0.1)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0.3, 3.0), st.floats(-0.9, 0.7))
def test_2f1_matches_mpmath(a, b, c, z):
    r = hypcore.pfq(PfqParams((a, b), (c,), z))
    ref = float(mpmath.hyp2f1(a, b, c, z))
    assert r.converged
    assert abs(r.value - ref) <= 1e-12 * max(1.0, abs(ref))


def test_derivative_by_parameter_shift_matches_finite_difference():
    p = PfqParams((0.5, 1.5, 2.0), (1.25, 3.0), -0.4)
    h = 1e-5
    fp = hypcore.pfq(PfqParams(p.numerators, p.denominators, -0.4 + h)).value
    fm = hypcore.pfq(PfqParams(p.numerators, p.denominators, -0.4 - h)).value
    d = hypcore.pfq_derivative(p, 1).value
    assert d == pytest.approx((fp - fm) / (2 * h), rel=1e-8)


def test_derivative_params_constant():
    shifted, c = hypcore.derivative_params(PfqParams((1, 2), (3,), 0.1), 2)
    assert shifted.numerators == (3, 4) and shifted.denominators == (5,)
    assert c == pytest.approx(1 * 2 * 2 * 3 / (3 * 4))


def test_legendre_forms_agree():
    y = Fraction(3, 7)
    for n in range(12):
        exact = hypcore.legendre_p_explicit(n, y)
        assert float(exact) == pytest.approx(hypcore.legendre_p(n, float(y)), abs=1e-14)
    assert hypcore.legendre_p(5, np.array([1.0, -1.0])).tolist() == [1.0, -1.0]


def test_pfq_array_matches_scalar():
    z = np.linspace(-0.8, 0.7, 9)
    vals, ok = hypcore.pfq_array((0.5, 1.5), (2.0,), z)
    assert ok.all()
    for zi, v in zip(z, vals):
        assert v == pytest.approx(hypcore.pfq(PfqParams((0.5, 1.5), (2.0,), zi)).value, rel=1e-13)


def test_cvz_close_to_one():
    z = np.array([-0.99999**2])
    vals, _ = hypcore.pfq_array((0.5, 1.0, 1.5), (2.0, 2.5), z, method="cvz")
    ref = float(mpmath.hyp3f2(0.5, 1.0, 1.5, 2.0, 2.5, z[0]))
    assert vals[0] == pytest.approx(ref, rel=1e-14)


def test_contiguous_relation_residual_small():
    r = hypcore.contiguous_3f2_residual(0.7, 1.3, 2.1, 1.4, 0.9, -0.6)
    assert r.converged and r.value < 1e-12
    hi = hypcore.contiguous_3f2_residual(0.7, 1.3, 2.1, 1.4, 0.9, -0.6, dps=30)
    assert hi.value < 1e-25
    with pytest.raises(ParameterError):
        hypcore.contiguous_3f2_residual(0.7, 1.3, 2.1, 1.4, 0.9, -1.2)


def test_whipple_exact_and_unbalanced_rejected():
    # -n + A + B + C + 1 = E + F + G
    n, A, B, C, E, F, G = 4, 1.5, 2.0, 6.5, 2, 2, 3
    assert hypcore.whipple_4f3_residual(n, A, B, C, E, F, G).value == 0.0
    with pytest.raises(ParameterError, match="not balanced"):
        hypcore.whipple_4f3_residual(n, A, B, C + 0.1, E, F, G)


def test_unconverged_flag_past_term_cap():
    r = hypcore.pfq(PfqParams((0.5, 1.0, 1.5), (2.0, 2.5), -0.9999), max_terms=50)
    assert not r.converged
