"""Rank-2 Xi-functions: exact combinatorics and the 3F2 representation.

With K = k1 + k2 and s = floor((k2 - k1) / 2),

    Xi_2^[k1,k2](x) = pi^2 (1/2)_K (2x)^K / (4^(K+1) k1! k2!)
                      * sum_{j=0}^{s} c_j x^(2j) 3F2(1/2+j, k1+1/2+j, K+1/2+2j;
                                                     k2+1+j, K+1+j; -x^2).

The c_j and the prefactor are kept as exact rationals; only the 3F2 values
are floating point.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np

from . import hypcore
from .errors import ConvergenceError, DomainError, ParameterError
from .hypcore import DEFAULT_TOL, EvalResult, PfqParams, Residual, pochhammer

HALF = Fraction(1, 2)
# Above this argument the alternating 3F2 is summed with CVZ acceleration in
# the vectorised path; the direct sum needs thousands of terms near x = 1.
CVZ_FROM = 0.9


@dataclass(frozen=True)
class Rank2Order:
    k1: int
    k2: int

    def __post_init__(self):
        a, b = int(self.k1), int(self.k2)
        if a != self.k1 or b != self.k2 or a < 0 or b < 0:
            raise ParameterError(f"orders must be non-negative integers, got {self.k1, self.k2}")
        object.__setattr__(self, "k1", min(a, b))
        object.__setattr__(self, "k2", max(a, b))

    @classmethod
    def coerce(cls, order) -> "Rank2Order":
        if isinstance(order, Rank2Order):
            return order
        if hasattr(order, "orders"):
            if len(order.orders) != 2:
                raise ParameterError("rank-2 functions need two orders")
            return cls(*order.orders)
        return cls(*order)

    @property
    def s(self) -> int:
        return (self.k2 - self.k1) // 2

    @property
    def total(self) -> int:
        return self.k1 + self.k2

    @property
    def is_diagonal_band(self) -> bool:
        return self.k2 - self.k1 <= 1


@dataclass(frozen=True)
class PiSquaredRational:
    """An exact multiple of pi^2."""

    coefficient: Fraction

    def __float__(self) -> float:
        return float(self.coefficient) * math.pi ** 2


# ---------------------------------------------------------------------------
# exact combinatorics of the cosine moments and S-sums


def a_closed(l: int, k1: int, k2: int) -> PiSquaredRational:
    """Closed form of the double cosine moment A_l(k1, k2) as a multiple of pi^2."""
    K = k1 + k2
    if l < K or (l - K) % 2:
        return PiSquaredRational(Fraction(0))
    n = (l - K) // 2
    num = math.comb(K, k1) * pochhammer(K + 1, 2 * n) ** 2
    den = (2**l * pochhammer(k1 + 1, n) * pochhammer(k2 + 1, n)
           * pochhammer(K + 1, n) * math.factorial(n))
    return PiSquaredRational(Fraction(num, den))


def s_sum_direct(k1: int, k2: int, n: int) -> int:
    """S_{k1,k2}(n) as the defining binomial sum."""
    return sum(math.comb(2 * n + k1 + k2, 2 * m + k1) * math.comb(2 * m + k1, m)
               * math.comb(2 * (n - m) + k2, n - m) for m in range(n + 1))


def s_sum_closed(k1: int, k2: int, n: int) -> Fraction:
    K = k1 + k2
    return Fraction(pochhammer(K + 1, 2 * n) ** 2 * math.comb(K, k1),
                    pochhammer(k1 + 1, n) * pochhammer(k2 + 1, n)
                    * pochhammer(K + 1, n) * math.factorial(n))


def s_sum_recurrence_check(k1: int, k2: int, n: int) -> bool:
    """First-order recurrence linking S(n+1) and S(n), checked in exact integers."""
    K = k1 + k2
    lhs = s_sum_direct(k1, k2, n + 1) * (n + 1) * (n + k1 + 1) * (n + k2 + 1) * (n + K + 1)
    rhs = (2 * n + K + 1) ** 2 * (2 * n + K + 2) ** 2 * s_sum_direct(k1, k2, n)
    return lhs == rhs


# ---------------------------------------------------------------------------
# series


def _check_x(x, open_left: bool = False) -> None:
    if open_left and not 0 < x < 1:
        raise DomainError(f"x must lie in (0, 1), got {x}")
    if not 0 <= x < 1:
        raise DomainError(f"x must lie in [0, 1), got {x}")


@lru_cache(maxsize=None)
def prefactor(order: Rank2Order) -> Fraction:
    """Rational part P of the prefactor, Xi = pi^2 * P * x^K * (...)."""
    K = order.total
    return (pochhammer(HALF, K) * 2**K
            / (4 ** (K + 1) * math.factorial(order.k1) * math.factorial(order.k2)))


@lru_cache(maxsize=None)
def j_coefficients(order: Rank2Order) -> tuple[Fraction, ...]:
    """Exact c_j, j = 0..s; factors like ((k1-k2)/2)_j may vanish."""
    k1, k2, K = order.k1, order.k2, order.total
    out = []
    for j in range(order.s + 1):
        num = (pochhammer(Fraction(k1 - k2, 2), j) * pochhammer(Fraction(k1 - k2 + 1, 2), j)
               * pochhammer(K + HALF, 2 * j))
        den = (pochhammer(k1 + 1, j) * pochhammer(k2 + 1, j) * pochhammer(K + 1, j)
               * math.factorial(j))
        out.append(Fraction(num) / den)
    return tuple(out)


def inner_parameters(order: Rank2Order, j: int) -> tuple[tuple, tuple]:
    k1, k2, K = order.k1, order.k2, order.total
    return ((0.5 + j, k1 + 0.5 + j, K + 0.5 + 2 * j), (k2 + 1.0 + j, K + 1.0 + j))


def _scale(norm) -> float:
    if norm is None:
        return 1.0
    from .xi1 import resolve

    return resolve(norm, 2).scale


def xi2_series(order, x: float, tol: float = DEFAULT_TOL, *, norm=None,
               dps: int | None = None) -> EvalResult:
    """Xi_2^[k1,k2](x) from the finite sum of 3F2 functions.

    ``norm`` defaults to the representation as written (no extra constant);
    ``dps`` runs the inner series in mpmath at that precision.
    """
    order = Rank2Order.coerce(order)
    _check_x(x)
    K = order.total
    pre = math.pi ** 2 * float(prefactor(order)) * x ** K * _scale(norm)
    if pre == 0.0:
        return EvalResult(0.0, 0.0, 1, True)
    total, err, terms, ok = 0.0, 0.0, 0, True
    for j, c in enumerate(j_coefficients(order)):
        if c == 0:
            continue
        num, den = inner_parameters(order, j)
        r = hypcore.pfq(PfqParams(num, den, -x * x), tol, dps=dps)
        w = float(c) * x ** (2 * j)
        total += w * r.value
        err += abs(w) * r.abs_error
        terms += r.terms_used
        ok &= r.converged
    return EvalResult(pre * total, abs(pre) * err, terms, ok)


def xi2_diag(order, x: float, tol: float = DEFAULT_TOL, *, norm=None) -> EvalResult:
    """Single-3F2 form valid when k2 - k1 <= 1."""
    order = Rank2Order.coerce(order)
    if not order.is_diagonal_band:
        raise ParameterError(f"single-3F2 form needs k2 - k1 <= 1, got {order}")
    _check_x(x)
    pre = math.pi ** 2 * float(prefactor(order)) * x ** order.total * _scale(norm)
    if pre == 0.0:
        return EvalResult(0.0, 0.0, 1, True)
    num, den = inner_parameters(order, 0)
    r = hypcore.pfq(PfqParams(num, den, -x * x), tol)
    return EvalResult(pre * r.value, abs(pre) * r.abs_error, r.terms_used, r.converged)


def xi2_values(order, xs, tol: float = DEFAULT_TOL, *, norm=None) -> np.ndarray:
    """Vectorised Xi_2 on an array of arguments in [0, 1)."""
    order = Rank2Order.coerce(order)
    xs = np.asarray(xs, dtype=float)
    if np.any((xs < 0) | (xs >= 1)):
        raise DomainError("x must lie in [0, 1)")
    z = -xs * xs
    far = xs > CVZ_FROM
    acc = np.zeros_like(xs)
    for j, c in enumerate(j_coefficients(order)):
        if c == 0:
            continue
        num, den = inner_parameters(order, j)
        f = np.empty_like(xs)
        if (~far).any():
            vals, ok = hypcore.pfq_array(num, den, z[~far], tol)
            if not ok.all():
                raise ConvergenceError("3F2 series did not converge")
            f[~far] = vals
        if far.any():
            f[far], _ = hypcore.pfq_array(num, den, z[far], method="cvz")
        acc += float(c) * xs ** (2 * j) * f
    pre = math.pi ** 2 * float(prefactor(order)) * _scale(norm)
    return pre * xs ** order.total * acc


def xi2_series_coefficients(order, n_max: int) -> list[Fraction]:
    """Exact Maclaurin coefficients e_n of the representation, Xi = pi^2 sum e_n x^n."""
    order = Rank2Order.coerce(order)
    K = order.total
    out = [Fraction(0)] * (n_max + 1)
    P = prefactor(order)
    for j, c in enumerate(j_coefficients(order)):
        if c == 0:
            continue
        num, den = inner_parameters(order, j)
        num = [Fraction(v) for v in num]
        den = [Fraction(v) for v in den]
        t = Fraction(1)
        m = 0
        while K + 2 * j + 2 * m <= n_max:
            out[K + 2 * j + 2 * m] += P * c * t
            for a in num:
                t *= a + m
            for b in den:
                t /= b + m
            t = -t / (m + 1)
            m += 1
    return out


def legendre_double_sum(order, x: float, n_terms: int = 60) -> float:
    """Truncated Legendre-generating-function expansion of Xi_2, built on a_closed.

    4 Xi_2(x) = sum_n x^n sum_p c_{n,p} A_p(k1, k2) / 2^p, where c_{n,p} are the
    power coefficients of P_n.
    """
    order = Rank2Order.coerce(order)
    total = 0.0
    for n in range(n_terms):
        acc = Fraction(0)
        for j in range(n // 2 + 1):
            p = n - 2 * j
            a = a_closed(p, order.k1, order.k2).coefficient
            if a == 0:
                continue
            c = Fraction((-1) ** j * math.factorial(2 * n - 2 * j),
                         2**n * math.factorial(p) * math.factorial(n - j) * math.factorial(j))
            acc += c * a / 2**p
        total += float(acc) * x ** n
    return math.pi ** 2 * total / 4


# ---------------------------------------------------------------------------
# derivatives and residuals


def diag_derivatives(order, x, max_order: int = 3, tol: float = DEFAULT_TOL, *,
                     dps: int | None = None) -> tuple[list, bool]:
    """[Xi, Xi', ...] of a diagonal-band function, termwise; mpf values when dps."""
    order = Rank2Order.coerce(order)
    if not order.is_diagonal_band:
        raise ParameterError(f"termwise derivatives need k2 - k1 <= 1, got {order}")
    num, den = inner_parameters(order, 0)
    if dps is not None:
        with mpmath.workdps(dps):
            xm = mpmath.mpf(x)
            p = PfqParams(num, den, -xm * xm)
            f, ok = [], True
            for m in range(max_order + 1):
                v, good = hypcore.pfq_derivative_native(p, m, tol, dps=dps)
                f.append(v)
                ok &= good
            pre = mpmath.pi ** 2 * mpmath.mpf(prefactor(order).numerator) / prefactor(order).denominator
            d = hypcore.power_composite_derivatives(order.total, -1, xm, f)
            return [pre * v for v in d], ok
    p = PfqParams(num, den, -x * x)
    f, ok = [], True
    for m in range(max_order + 1):
        r = hypcore.pfq_derivative(p, m, tol)
        f.append(r.value)
        ok &= r.converged
    pre = math.pi ** 2 * float(prefactor(order))
    return [pre * v for v in hypcore.power_composite_derivatives(order.total, -1, x, f)], ok


def _normalized(terms: Sequence) -> float:
    scale = max(abs(t) for t in terms)
    if not scale:
        return 0.0
    return float(abs(sum(terms)) / scale)


def _precision(dps: int | None):
    """Working-precision context so residual arithmetic keeps the digits of its inputs."""
    return mpmath.workdps(dps) if dps is not None else contextlib.nullcontext()


def xi2_diffdiff_residual(k: int, x: float, *, dps: int | None = None) -> Residual:
    """(1/2)(1/x + (1 - x^2) D) Xi^[k,k+1] - (k + 1/4) Xi^[k,k] + (k + 3/4) Xi^[k+1,k+1]."""
    if int(k) != k or k < 0:
        raise ParameterError("k must be a non-negative integer")
    _check_x(x, open_left=True)
    with _precision(dps):
        off, ok1 = diag_derivatives(Rank2Order(k, k + 1), x, 1, dps=dps)
        lo, ok2 = diag_derivatives(Rank2Order(k, k), x, 0, dps=dps)
        hi, ok3 = diag_derivatives(Rank2Order(k + 1, k + 1), x, 0, dps=dps)
        if dps is not None:
            x = mpmath.mpf(x)
        terms = [off[0] / (2 * x), (1 - x * x) * off[1] / 2,
                 -(k + 0.25) * lo[0], (k + 0.75) * hi[0]]
        return Residual(_normalized(terms), ok1 and ok2 and ok3)


def eq17_coefficients(order, x) -> list:
    """Coefficients [C3, C2, C1, C0] of the third-order operator for a diagonal-band order."""
    order = Rank2Order.coerce(order)
    k1, k2 = order.k1, order.k2
    S2 = (k1 + k2) ** 2
    d = k2 - k1
    seven_thirds = _third(7, x)
    ten_thirds = _third(10, x)
    return [x ** 3 * (1 + x * x),
            x * x * ((k1 - k2 + 6) * (x * x - 1) + 9),
            -x * (S2 * (x * x + 1) + (d - seven_thirds) * (3 * x * x - 1) - ten_thirds),
            x * x * (S2 - 1) * (d - 1) + (k1 - k2) * S2]


def _third(n: int, like):
    """n/3 in the arithmetic of `like` (float, Fraction or mpf)."""
    return n / (like * 0 + 3)


def lowest_mode_coefficients(x) -> list:
    return [x ** 3 * (1 + x * x), 3 * x * x * (2 * x * x + 1), x * (7 * x * x + 1), x * x]


def xi2_ode_residual(order, x: float, *, form: str = "general",
                     dps: int | None = None) -> Residual:
    """Normalised residual of the third-order equation applied to Xi_2.

    ``form="lowest"`` uses the specialised k1 = k2 = 0 operator.
    """
    order = Rank2Order.coerce(order)
    if not order.is_diagonal_band:
        raise ParameterError(f"the third-order equation needs k2 - k1 <= 1, got {order}")
    _check_x(x, open_left=True)
    if form not in ("general", "lowest"):
        raise ParameterError("form must be 'general' or 'lowest'")
    if form == "lowest" and order.total:
        raise ParameterError("lowest-mode equation applies to (0, 0) only")
    with _precision(dps):
        d, ok = diag_derivatives(order, x, 3, dps=dps)
        if dps is not None:
            x = mpmath.mpf(x)
        coeffs = eq17_coefficients(order, x) if form == "general" else lowest_mode_coefficients(x)
        terms = [c * v for c, v in zip(coeffs, reversed(d))]
        return Residual(_normalized(terms), ok)
