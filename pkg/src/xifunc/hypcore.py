"""Generalized hypergeometric series engine and classical-polynomial helpers.

Scalar evaluation (`pfq`) sums the series term by term with the ratio
recurrence.  The same summation loop runs on Python floats or on mpmath
``mpf`` numbers, which is how the identity checks escalate precision when a
series cancels badly.  `pfq_array` is a numpy version used where thousands
of arguments share one parameter set (kernel assembly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import ConvergenceError, ParameterError

Rational = Fraction

MAX_TERMS = 100_000
DEFAULT_TOL = 1e-14
# 2F1 arguments above this are mapped through z -> 1 - z before summing.
NEAR_ONE = 0.75
# Moment-sequence acceleration: 30 terms give ~5.8**-30 relative error.
CVZ_TERMS = 30
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class EvalResult:
    value: float
    abs_error: float
    terms_used: int
    converged: bool

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class Residual:
    """Normalised identity residual plus the convergence state of its inputs."""

    value: float
    converged: bool = True

    def __float__(self) -> float:
        return float(self.value)


def _is_nonpos_int(v) -> bool:
    return v <= 0 and v == int(v)


@dataclass(frozen=True)
class PfqParams:
    numerators: tuple
    denominators: tuple
    argument: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "numerators", tuple(self.numerators))
        object.__setattr__(self, "denominators", tuple(self.denominators))
        p, q = len(self.numerators), len(self.denominators)
        if p > 4 or q > 3:
            raise ParameterError(f"only p <= 4 and q <= 3 are supported, got {p}F{q}")
        stop = self.termination_index
        for b in self.denominators:
            if _is_nonpos_int(b) and (stop is None or -b < stop):
                raise ParameterError(f"denominator parameter {b} is a pole of the series")

    @property
    def terminating(self) -> bool:
        return any(_is_nonpos_int(a) for a in self.numerators)

    @property
    def termination_index(self) -> int | None:
        """Index of the last non-zero term of a terminating series."""
        ends = [-int(a) for a in self.numerators if _is_nonpos_int(a)]
        return min(ends) if ends else None

    def shifted(self, m: int) -> "PfqParams":
        return PfqParams(
            tuple(a + m for a in self.numerators),
            tuple(b + m for b in self.denominators),
            self.argument,
        )


def pochhammer(a, n: int):
    """Rising factorial (a)_n, in the arithmetic of `a` (float, int, Fraction, mpf)."""
    if n < 0:
        raise ParameterError("pochhammer needs n >= 0")
    out = a * 0 + 1
    for i in range(n):
        out *= a + i
    return out


def legendre_p(n: int, z):
    """P_n(z) by the three-term recurrence; `z` may be a numpy array."""
    if n < 0:
        raise ParameterError("Legendre degree must be non-negative")
    p_prev, p = z * 0 + 1.0, z * 1.0
    if n == 0:
        return p_prev
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * z * p - k * p_prev) / (k + 1)
    return p


def legendre_p_explicit(n: int, y):
    """P_n(y) from the explicit finite sum; exact when `y` is a Fraction."""
    total = y * 0
    for j in range(n // 2 + 1):
        c = Fraction((-1) ** j * math.factorial(2 * n - 2 * j),
                     math.factorial(n - 2 * j) * math.factorial(n - j) * math.factorial(j))
        total = total + c * y ** (n - 2 * j)
    return total / 2**n


# ---------------------------------------------------------------------------
# scalar summation


def _direct_sum(a, b, z, tol, max_terms, eps):
    """Sum the series directly. Works for floats and mpf alike.

    Returns (value, abs_error, terms_used, converged).
    """
    one = z * 0 + 1
    s, t = one, one
    big = abs(t)
    small_run = 0
    prev_abs = abs(t)
    stop = None
    for a_i in a:
        if _is_nonpos_int(a_i):
            stop = -int(a_i) if stop is None else min(stop, -int(a_i))
    m = 0
    while m < max_terms:
        if stop is not None and m >= stop:
            return s, 2 * eps * big, m + 1, True
        num = one
        for a_i in a:
            num *= a_i + m
        den = one * (m + 1)
        for b_j in b:
            den *= b_j + m
        t = t * num / den * z
        s = s + t
        m += 1
        at = abs(t)
        big = max(big, at)
        if at == 0 and stop is not None:
            return s, 2 * eps * big, m + 1, True
        if at < tol * abs(s):
            small_run += 1
        else:
            small_run = 0
        if small_run >= 3:
            rho = at / prev_abs if prev_abs else 0
            tail = at * rho / (1 - rho) if rho < 1 else at * max_terms
            err = tail + 2 * eps * big
            if tail <= tol * max(1, abs(s)):
                # converged means the truncation tail is within tolerance;
                # rounding from cancellation is reported in the error only
                return s, err, m + 1, True
        prev_abs = at
    return s, abs(t) * max_terms + 2 * eps * big, m + 1, False


def _log_case_2f1(a, b, z, tol, max_terms):
    """2F1(a, b; a+b; z) through the logarithmic z -> 1-z connection formula."""
    w = 1.0 - z
    lw = math.log(w)
    pref = math.exp(math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b))
    psi1 = float(mpmath.digamma(1))
    psia = float(mpmath.digamma(a))
    psib = float(mpmath.digamma(b))
    coef = 1.0
    wn = 1.0
    s = 0.0
    n = 0
    small_run = 0
    while n < max_terms:
        t = coef * (2 * psi1 - psia - psib - lw) * wn
        s += t
        if abs(t) < tol * abs(s):
            small_run += 1
            if small_run >= 3:
                return pref * s, pref * (abs(t) * 2 + 2 * _EPS * abs(s)), n + 1, True
        else:
            small_run = 0
        coef *= (a + n) * (b + n) / ((n + 1) ** 2)
        psi1 += 1.0 / (n + 1)
        psia += 1.0 / (a + n)
        psib += 1.0 / (b + n)
        wn *= w
        n += 1
    return pref * s, math.inf, n, False


def _generic_connection_2f1(a, b, c, z, tol, max_terms):
    """2F1 for non-integer c-a-b via the standard z -> 1-z connection formula."""
    w = 1.0 - z
    g = math.gamma
    c1 = g(c) * g(c - a - b) / (g(c - a) * g(c - b))
    c2 = g(c) * g(a + b - c) / (g(a) * g(b))
    f1 = _direct_sum((a, b), (a + b - c + 1,), w, tol, max_terms, _EPS)
    f2 = _direct_sum((c - a, c - b), (c - a - b + 1,), w, tol, max_terms, _EPS)
    scale = w ** (c - a - b)
    value = c1 * f1[0] + scale * c2 * f2[0]
    err = abs(c1) * f1[1] + abs(scale * c2) * f2[1]
    return value, err, f1[2] + f2[2], f1[3] and f2[3]


def _check_domain(params: PfqParams):
    p, q = len(params.numerators), len(params.denominators)
    if params.terminating:
        return
    if p > q + 1:
        raise ParameterError(f"non-terminating {p}F{q} diverges for every z != 0")
    if p == q + 1 and abs(params.argument) >= 1:
        raise ParameterError(f"{p}F{q} series needs |z| < 1, got z={params.argument}")


def _evaluate(params: PfqParams, tol: float, dps: int | None, max_terms: int):
    """Shared evaluation path; returns native-typed (value, err, terms, conv)."""
    _check_domain(params)
    a, b, z = params.numerators, params.denominators, params.argument
    if z == 0:
        return (mpmath.mpf(1) if dps else 1.0), 0.0, 1, True
    if dps is not None:
        with mpmath.workdps(dps):
            am = [mpmath.mpf(v) for v in a]
            bm = [mpmath.mpf(v) for v in b]
            zm = mpmath.mpf(z)
            return _direct_sum(am, bm, zm, mpmath.mpf(10) ** (-dps + 3), max_terms,
                               mpmath.mpf(10) ** (-dps))
    a = tuple(float(v) for v in a)
    b = tuple(float(v) for v in b)
    z = float(z)
    if len(a) == 2 and len(b) == 1 and z > NEAR_ONE and not params.terminating:
        gap = b[0] - a[0] - a[1]
        if gap == 0:
            return _log_case_2f1(a[0], a[1], z, tol, max_terms)
        if gap != round(gap):
            return _generic_connection_2f1(a[0], a[1], b[0], z, tol, max_terms)
    return _direct_sum(a, b, z, tol, max_terms, _EPS)


def pfq(params: PfqParams, tol: float = DEFAULT_TOL, *, dps: int | None = None,
        max_terms: int = MAX_TERMS) -> EvalResult:
    """Evaluate pFq(a; b; z).

    Stops once three consecutive terms fall below ``tol * |partial sum|`` and the
    geometric tail estimate is within tolerance; past `max_terms` the result
    is returned with ``converged=False``.  With ``dps`` set the sum runs in
    mpmath at that many digits (value is rounded back to float).
    """
    v, err, n, ok = _evaluate(params, tol, dps, max_terms)
    return EvalResult(float(v), float(err), int(n), bool(ok))


def pfq_native(params: PfqParams, tol: float = DEFAULT_TOL, *, dps: int | None = None,
               max_terms: int = MAX_TERMS):
    """Like `pfq` but keeps the value in its working precision (mpf when dps)."""
    v, err, n, ok = _evaluate(params, tol, dps, max_terms)
    return v, bool(ok)


def derivative_params(params: PfqParams, order: int) -> tuple[PfqParams, Fraction | float]:
    """Parameters and constant of d^order/dz^order pFq = const * pFq(a+order; b+order; z)."""
    if order < 0 or order > 3:
        raise ParameterError("derivative order must be in 0..3")
    const = 1
    for a in params.numerators:
        const *= pochhammer(a, order)
    for b in params.denominators:
        const /= pochhammer(b, order)
    return params.shifted(order), const


def pfq_derivative(params: PfqParams, order: int, tol: float = DEFAULT_TOL, *,
                   dps: int | None = None) -> EvalResult:
    """order-th z-derivative of pFq by the parameter-shift identity."""
    shifted, const = derivative_params(params, order)
    if const == 0:
        return EvalResult(0.0, 0.0, 1, True)
    r = pfq(shifted, tol, dps=dps)
    return EvalResult(float(const) * r.value, abs(float(const)) * r.abs_error,
                      r.terms_used, r.converged)


def pfq_derivative_native(params: PfqParams, order: int, tol: float = DEFAULT_TOL, *,
                          dps: int | None = None):
    """Like `pfq_derivative` but keeps the working precision (mpf when dps)."""
    if dps is None:
        shifted, const = derivative_params(params, order)
        if const == 0:
            return 0.0, True
        v, ok = pfq_native(shifted, tol)
        return float(const) * v, ok
    with mpmath.workdps(dps):
        mp_params = PfqParams(tuple(mpmath.mpf(v) for v in params.numerators),
                              tuple(mpmath.mpf(v) for v in params.denominators),
                              mpmath.mpf(params.argument))
        shifted, const = derivative_params(mp_params, order)
        if const == 0:
            return mpmath.mpf(0), True
        v, ok = pfq_native(shifted, tol, dps=dps)
        return const * v, ok


def _to_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    return Fraction(float(v))


def pfq_terminating_exact(params: PfqParams) -> Fraction:
    """Exact value of a terminating series with rational parameters."""
    a = [_to_fraction(v) for v in params.numerators]
    b = [_to_fraction(v) for v in params.denominators]
    z = _to_fraction(params.argument)
    stop = PfqParams(a, b, z).termination_index
    if stop is None:
        raise ParameterError("series does not terminate: no non-positive integer numerator")
    total = Fraction(1)
    t = Fraction(1)
    for m in range(stop):
        num = Fraction(1)
        for a_i in a:
            num *= a_i + m
        den = Fraction(m + 1)
        for b_j in b:
            den *= b_j + m
        if den == 0:
            raise ParameterError("denominator vanishes before the series terminates")
        t = t * num / den * z
        total += t
    return total


# ---------------------------------------------------------------------------
# calculus helpers shared by the rank-1 and rank-2 evaluators


def power_composite_derivatives(alpha: int, sign: int, x, f_derivs: Sequence):
    """Derivatives in x of  x**alpha * F(sign * x**2)  up to len(f_derivs) - 1.

    ``f_derivs[m]`` is the m-th derivative of F at ``sign * x**2`` (m <= 3).
    """
    order = len(f_derivs) - 1
    f0 = f_derivs[0]
    f1 = f_derivs[1] if order >= 1 else 0
    f2 = f_derivs[2] if order >= 2 else 0
    f3 = f_derivs[3] if order >= 3 else 0
    # G(x) = F(sign x^2)
    g = [f0,
         2 * sign * x * f1,
         2 * sign * f1 + 4 * x * x * f2,
         12 * x * f2 + 8 * sign * x ** 3 * f3]
    # (x^alpha)^(j) = alpha (alpha-1) ... (alpha-j+1) x^(alpha-j)
    def pw(j):
        c = 1
        for i in range(j):
            c *= alpha - i
        if c == 0:
            return 0 * x
        return c * x ** (alpha - j)
    out = []
    for n in range(order + 1):
        total = 0 * x
        for j in range(n + 1):
            total = total + math.comb(n, j) * pw(j) * g[n - j]
        out.append(total)
    return out


# ---------------------------------------------------------------------------
# identity residuals


def contiguous_3f2_residual(a1, a2, a3, b1, b2, y, tol: float = DEFAULT_TOL, *,
                            dps: int | None = None) -> Residual:
    """Normalised residual of the 3F2 contiguous relation with delta = y d/dy.

    [b1 b2 + a2(a3-a1) y + (b2 + (a3-a1) y) delta] 3F2(a1,a2,a3; b1+1,b2+1; y)
      = a2 a3 (b2-a1+1) y/(b2+1) 3F2(a1,a2+1,a3+1; b1+1,b2+2; y)
        + b1 b2 3F2(a1,a2,a3-1; b1,b2; y)
    """
    if abs(y) >= 1:
        raise ParameterError("contiguous relation is checked only for |y| < 1")

    def run():
        conv = mpmath.mpf if dps else float
        A1, A2, A3, B1, B2, Y = map(conv, (a1, a2, a3, b1, b2, y))
        base = PfqParams((A1, A2, A3), (B1 + 1, B2 + 1), Y)
        f, ok0 = pfq_native(base, tol, dps=dps)
        df, ok1 = pfq_derivative_native(base, 1, tol, dps=dps)
        lhs = (B1 * B2 + A2 * (A3 - A1) * Y) * f + (B2 + (A3 - A1) * Y) * Y * df
        up, ok2 = pfq_native(PfqParams((A1, A2 + 1, A3 + 1), (B1 + 1, B2 + 2), Y), tol, dps=dps)
        rhs = A2 * A3 * (B2 - A1 + 1) * Y / (B2 + 1) * up
        ok3 = True
        if B1 * B2 != 0:
            down, ok3 = pfq_native(PfqParams((A1, A2, A3 - 1), (B1, B2), Y), tol, dps=dps)
            rhs = rhs + B1 * B2 * down
        res = abs(lhs - rhs) / max(1, abs(rhs))
        return Residual(float(res), ok0 and ok1 and ok2 and ok3)

    if dps is not None:
        with mpmath.workdps(dps):
            return run()
    return run()


BALANCE_TOL = 1e-12


def whipple_4f3_residual(n: int, A, B, C, E, F, G) -> Residual:
    """Normalised residual of the balanced terminating 4F3(1) transformation.

    4F3(-n,A,B,C; E,F,G; 1)
      = (F-C)_n (G-C)_n / ((F)_n (G)_n) * 4F3(-n,E-A,E-B,C; E,E+F-A-B,E+G-A-B; 1)

    Both sides are summed exactly over the (binary-exact) rational values of
    the inputs, so the residual carries no rounding from the sums themselves.
    """
    if n < 0 or int(n) != n:
        raise ParameterError("n must be a non-negative integer")
    A, B, C, E, F, G = (_to_fraction(v) for v in (A, B, C, E, F, G))
    imbalance = -n + A + B + C + 1 - (E + F + G)
    if abs(imbalance) > BALANCE_TOL:
        raise ParameterError(
            f"4F3 is not balanced: -n+A+B+C+1-(E+F+G) = {float(imbalance):.3e} "
            f"for n={n}, A={float(A)}, B={float(B)}, C={float(C)}, "
            f"E={float(E)}, F={float(F)}, G={float(G)}")
    lhs = pfq_terminating_exact(PfqParams((-n, A, B, C), (E, F, G), 1))
    ratio = (pochhammer(F - C, n) * pochhammer(G - C, n)
             / (pochhammer(F, n) * pochhammer(G, n)))
    rhs = ratio * pfq_terminating_exact(
        PfqParams((-n, E - A, E - B, C), (E, E + F - A - B, E + G - A - B), 1))
    return Residual(float(abs(lhs - rhs) / max(1, abs(rhs))), True)


# ---------------------------------------------------------------------------
# vectorised evaluation


def cvz_weights(n: int = CVZ_TERMS) -> np.ndarray:
    """Weights w_k with sum_k (-1)^k a_k ~= sum_k w_k a_k for moment sequences a_k.

    Cohen, Rodriguez Villegas and Zagier's first acceleration algorithm.
    """
    d = (3 + math.sqrt(8)) ** n
    d = (d + 1 / d) / 2
    b, c = -1.0, -d
    w = np.empty(n)
    for k in range(n):
        c = b - c
        w[k] = c / d
        b = (k + n) * (k - n) * b / ((k + 0.5) * (k + 1))
    return w


def pfq_array(numerators: Sequence[float], denominators: Sequence[float], z: np.ndarray,
              tol: float = DEFAULT_TOL, *, method: str = "direct",
              max_terms: int = MAX_TERMS) -> tuple[np.ndarray, np.ndarray]:
    """pFq at many arguments sharing one parameter set.

    ``method="direct"`` sums term by term with per-element stopping;
    ``method="cvz"`` accelerates an alternating series (z < 0) whose term
    magnitudes form a moment sequence, using a fixed number of terms.
    Returns ``(values, converged)``.
    """
    z = np.asarray(z, dtype=float)
    shape = z.shape
    z = z.ravel()
    a = [float(v) for v in numerators]
    b = [float(v) for v in denominators]
    if method == "cvz":
        if np.any(z > 0):
            raise ParameterError("cvz acceleration needs non-positive arguments")
        w = cvz_weights()
        t = np.ones_like(z)
        s = w[0] * t
        for m in range(1, len(w)):
            coef = 1.0
            for a_i in a:
                coef *= a_i + m - 1
            for b_j in b:
                coef /= b_j + m - 1
            coef /= m
            t = t * coef * (-z)
            s += w[m] * t
        return s.reshape(shape), np.ones(shape, dtype=bool)
    if method != "direct":
        raise ParameterError(f"unknown method {method!r}")
    values = np.ones_like(z)
    done = np.zeros(z.shape, dtype=bool)
    idx = np.arange(z.size)
    zz = z.copy()
    s = np.ones_like(zz)
    t = np.ones_like(zz)
    run = np.zeros(zz.shape, dtype=int)
    m = 0
    while idx.size and m < max_terms:
        coef = 1.0
        for a_i in a:
            coef *= a_i + m
        for b_j in b:
            coef /= b_j + m
        coef /= m + 1
        m += 1
        if coef == 0.0:
            values[idx] = s
            done[idx] = True
            idx = idx[:0]
            break
        t = t * coef * zz
        s = s + t
        small = np.abs(t) <= tol * np.abs(s)
        run = np.where(small, run + 1, 0)
        fin = run >= 3
        if fin.any():
            # geometric tail check before accepting
            rho = np.abs(coef * zz[fin])
            with np.errstate(divide="ignore", invalid="ignore"):
                tail = np.where(rho < 1, np.abs(t[fin]) * rho / (1 - rho), np.inf)
            ok_local = tail <= tol * np.maximum(1.0, np.abs(s[fin]))
            fin_idx = np.flatnonzero(fin)[ok_local]
            if fin_idx.size:
                values[idx[fin_idx]] = s[fin_idx]
                done[idx[fin_idx]] = True
                keep = np.ones(idx.size, dtype=bool)
                keep[fin_idx] = False
                idx, zz, s, t, run = idx[keep], zz[keep], s[keep], t[keep], run[keep]
    if idx.size:
        values[idx] = s
    return values.reshape(shape), done.reshape(shape)


def hyp2f1_log_case_array(a: float, b: float, z: np.ndarray, tol: float = DEFAULT_TOL,
                          max_terms: int = 2000, *, w: np.ndarray | None = None) -> np.ndarray:
    """Vectorised 2F1(a, b; a+b; z) for z close to 1 (logarithmic connection).

    Pass ``w = 1 - z`` when the caller knows it more accurately than the
    rounded difference; the log term is sensitive to it.
    """
    z = np.asarray(z, dtype=float)
    w = 1.0 - z if w is None else np.asarray(w, dtype=float)
    lw = np.log(w)
    pref = math.exp(math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b))
    psi1 = float(mpmath.digamma(1))
    psia = float(mpmath.digamma(a))
    psib = float(mpmath.digamma(b))
    coef = 1.0
    wn = np.ones_like(w)
    s = np.zeros_like(w)
    for n in range(max_terms):
        t = coef * (2 * psi1 - psia - psib - lw) * wn
        s += t
        if np.all(np.abs(t) <= tol * np.abs(s)):
            return pref * s
        coef *= (a + n) * (b + n) / ((n + 1) ** 2)
        psi1 += 1.0 / (n + 1)
        psia += 1.0 / (a + n)
        psib += 1.0 / (b + n)
        wn = wn * w
    raise ConvergenceError("logarithmic 2F1 connection series did not converge")
