"""Rank-1 Xi-functions through the Gauss hypergeometric function.

    Xi_1^[k](x) = c * (1/2)_k x^k / (2 k!) * 2F1(1/2, 1/2 + k; k + 1; x^2)

In ``paper`` normalization c = 1.  The defining integral is larger by a
constant factor, which `calibrate_normalization` measures against the
quadrature oracle; ``calibrated`` normalization applies it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import hypcore
from .errors import CalibrationError, ConvergenceError, DomainError, ParameterError
from .hypcore import DEFAULT_TOL, EvalResult, PfqParams, Residual

MODES = ("paper", "calibrated")
# Sample sets for the cached default calibration, and a disjoint set used to
# confirm that the constant does not depend on which samples were chosen.
CALIBRATION_XS = (0.15, 0.35, 0.55, 0.75)
CALIBRATION_XS_ALT = (0.25, 0.45, 0.65, 0.85)
CALIBRATION_ORDERS = {1: (0, 1, 2), 2: ((0, 0), (0, 1), (1, 1))}
SPREAD_LIMIT = 1e-6


@dataclass(frozen=True)
class Normalization:
    mode: str = "paper"
    constant: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"normalization mode must be one of {MODES}")
        if not self.constant > 0:
            raise ParameterError("normalization constant must be positive")
        if self.mode == "paper" and self.constant != 1.0:
            raise ParameterError("paper normalization has no free constant")

    @classmethod
    def paper(cls) -> "Normalization":
        return cls("paper", 1.0)

    @classmethod
    def calibrated(cls, rank: int = 1) -> "Normalization":
        """Normalization whose constant comes from the cached oracle calibration."""
        return cls("calibrated", default_calibration(rank).constant)

    @property
    def scale(self) -> float:
        return self.constant


PAPER = Normalization.paper()


def resolve(norm: Normalization | str | None, rank: int = 1) -> Normalization:
    if norm is None:
        return PAPER
    if norm == "paper":
        return PAPER
    if norm == "calibrated":
        return Normalization.calibrated(rank)
    if isinstance(norm, str):
        raise ParameterError(f"normalization mode must be one of {MODES}")
    return norm


# ---------------------------------------------------------------------------
# coefficients


@dataclass(frozen=True)
class SeriesCoefficients:
    """Maclaurin coefficients tau_n of the paper-normalized series, exact."""

    order: int
    taus: tuple

    def values(self, norm: Normalization | None = None) -> np.ndarray:
        return resolve(norm).scale * np.array([float(t) for t in self.taus])


def tau_coefficients(k: int, n_max: int) -> SeriesCoefficients:
    """tau_n^[k] for n = 0..n_max; zero unless n >= k and n - k is even."""
    _check_order(k)
    half = Fraction(1, 2)
    taus = []
    for n in range(n_max + 1):
        if n < k or (n - k) % 2:
            taus.append(Fraction(0))
            continue
        lo, hi = (n - k) // 2, (n + k) // 2
        taus.append(half * hypcore.pochhammer(half, lo) * hypcore.pochhammer(half, hi)
                    / (math.factorial(lo) * math.factorial(hi)))
    return SeriesCoefficients(k, tuple(taus))


def _check_order(k) -> None:
    if int(k) != k or k < 0:
        raise ParameterError(f"order must be a non-negative integer, got {k}")


def _check_x(x, open_left: bool = False) -> None:
    if open_left and not 0 < x < 1:
        raise DomainError(f"x must lie in (0, 1), got {x}")
    if not 0 <= x < 1:
        raise DomainError(f"x must lie in [0, 1), got {x}")


def _params(k: int, x: float) -> PfqParams:
    return PfqParams((0.5, 0.5 + k), (k + 1.0,), x * x)


def _prefactor(k: int) -> float:
    return float(hypcore.pochhammer(Fraction(1, 2), k) / (2 * math.factorial(k)))


# ---------------------------------------------------------------------------
# evaluation


def xi1_series(k: int, x: float, tol: float = DEFAULT_TOL,
               norm: Normalization | str | None = None) -> EvalResult:
    """Xi_1^[k](x) from the 2F1 representation."""
    _check_order(k)
    _check_x(x)
    c = resolve(norm, 1).scale * _prefactor(k) * x ** k
    if c == 0.0:
        return EvalResult(0.0, 0.0, 1, True)
    r = hypcore.pfq(_params(k, x), tol)
    return EvalResult(c * r.value, abs(c) * r.abs_error, r.terms_used, r.converged)


def xi1_values(k: int, xs, norm: Normalization | str | None = None,
               tol: float = DEFAULT_TOL, *, gap=None) -> np.ndarray:
    """Vectorised Xi_1^[k] on an array of arguments in [0, 1).

    ``gap`` optionally supplies 1 - x exactly (for ratios of nearby radii the
    rounded 1 - x loses most of its digits and Xi_1 is logarithmic there).
    """
    _check_order(k)
    xs = np.asarray(xs, dtype=float)
    if np.any((xs < 0) | (xs >= 1)):
        raise DomainError("x must lie in [0, 1)")
    gap = 1.0 - xs if gap is None else np.asarray(gap, dtype=float)
    if np.any(gap <= 0):
        raise DomainError("x must lie in [0, 1)")
    z = xs * xs
    f = np.empty_like(z)
    near = z > hypcore.NEAR_ONE
    if (~near).any():
        vals, ok = hypcore.pfq_array((0.5, 0.5 + k), (k + 1.0,), z[~near], tol)
        if not ok.all():
            raise ConvergenceError("2F1 series did not converge")
        f[~near] = vals
    if near.any():
        g = gap[near]
        f[near] = hypcore.hyp2f1_log_case_array(0.5, 0.5 + k, z[near], tol, w=g * (2 - g))
    return resolve(norm, 1).scale * _prefactor(k) * xs ** k * f


def xi1_derivatives(k: int, x: float, order: int = 2, tol: float = DEFAULT_TOL,
                    norm: Normalization | str | None = None) -> tuple[list[float], bool]:
    """[Xi, Xi', ..., Xi^(order)] at x from termwise differentiated series."""
    _check_order(k)
    _check_x(x)
    p = _params(k, x)
    f, ok = [], True
    for m in range(order + 1):
        r = hypcore.pfq_derivative(p, m, tol)
        f.append(r.value)
        ok &= r.converged
    c = resolve(norm, 1).scale * _prefactor(k)
    return [c * d for d in hypcore.power_composite_derivatives(k, 1, x, f)], ok


# ---------------------------------------------------------------------------
# calibration


@dataclass(frozen=True)
class Calibration:
    rank: int
    constant: float
    spread: float
    samples: int


def calibrate_normalization(rank: int, sample_xs: Sequence[float],
                            sample_orders: Sequence, spec=None) -> Calibration:
    """Least-squares constant c with c * series ~ oracle over all (order, x) pairs.

    ``spread`` is the largest relative deviation of a per-sample ratio from c;
    a spread above 1e-6 means the mismatch is not one global constant and
    raises `CalibrationError`.
    """
    from . import oracle

    pairs = list(itertools.product(sample_orders, sample_xs))
    if len(pairs) < 5:
        raise ParameterError("calibration needs at least 5 (order, x) pairs")
    series, truth = [], []
    for order, x in pairs:
        if not 0 < x < 0.9:
            raise ParameterError(f"calibration samples must lie in (0, 0.9), got {x}")
        if rank == 1:
            xo = oracle.XiOrder.of(order)
            s = xi1_series(order, x).value
        elif rank == 2:
            from . import xi2

            xo = oracle.XiOrder.of(*order)
            s = xi2.xi2_series(xi2.Rank2Order(*order), x).value
        else:
            raise ParameterError("rank must be 1 or 2")
        series.append(s)
        truth.append(oracle.xi_reference(xo, x, spec).value)
    s, t = np.array(series), np.array(truth)
    c = float(s @ t / (s @ s))
    spread = float(np.max(np.abs(t / s / c - 1)))
    if spread > SPREAD_LIMIT:
        raise CalibrationError(
            f"rank-{rank} ratios are not a single constant (spread {spread:.3e})")
    return Calibration(rank, c, spread, len(pairs))


@lru_cache(maxsize=None)
def default_calibration(rank: int) -> Calibration:
    return calibrate_normalization(rank, CALIBRATION_XS, CALIBRATION_ORDERS[rank])


# ---------------------------------------------------------------------------
# identity residuals


def _normalized(terms: Sequence[float]) -> float:
    scale = max(abs(t) for t in terms)
    return abs(math.fsum(terms)) / scale if scale else 0.0


def xi1_ode_terms(k: int, x: float, form: str = "derived",
                  norm: Normalization | str | None = None) -> tuple[list[float], bool]:
    """The three terms of the second-order equation applied to Xi_1^[k].

    ``form="derived"`` uses x(1 - 3x^2) as the first-derivative coefficient,
    which is what the 2F1 equation transforms into; ``form="variant"`` uses
    x(1 - 3x), which does not annihilate Xi_1 and is kept for comparison.
    """
    _check_x(x, open_left=True)
    if form == "derived":
        c1 = x * (1 - 3 * x * x)
    elif form == "variant":
        c1 = x * (1 - 3 * x)
    else:
        raise ParameterError("form must be 'derived' or 'variant'")
    d, ok = xi1_derivatives(k, x, 2, norm=norm)
    return [x * x * (1 - x * x) * d[2], c1 * d[1], (x * x * (k * k - 1) - k * k) * d[0]], ok


def xi1_ode_residual(k: int, x: float, norm: Normalization | str | None = None,
                     form: str = "derived") -> Residual:
    """Residual of the rank-1 second-order equation, normalised by the largest term."""
    terms, ok = xi1_ode_terms(k, x, form, norm)
    return Residual(_normalized(terms), ok)


def xi1_diffdiff_residual(k: int, x: float,
                          norm: Normalization | str | None = None) -> Residual:
    """[x D + 1/2](Xi^k + Xi^(k+2)) - [(1 + x^2) D + x] Xi^(k+1), normalised."""
    _check_order(k)
    _check_x(x, open_left=True)
    a, ok_a = xi1_derivatives(k, x, 1, norm=norm)
    b, ok_b = xi1_derivatives(k + 1, x, 1, norm=norm)
    c, ok_c = xi1_derivatives(k + 2, x, 1, norm=norm)
    terms = [x * a[1], 0.5 * a[0], x * c[1], 0.5 * c[0],
             -(1 + x * x) * b[1], -x * b[0]]
    return Residual(_normalized(terms), ok_a and ok_b and ok_c)
