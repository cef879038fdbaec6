"""Brute-force evaluators of the defining integrals.

Everything here works from the raw trigonometric integrands and never calls
the hypergeometric representations, so it can serve as ground truth for them.

Two quadrature engines are provided:

* adaptive composite Gauss-Legendre in double precision (`integrate_1d`,
  `integrate_2d`), refined breadth-first so each level is one vectorised
  call of the integrand;
* the periodic trapezoidal rule in mpmath (`xi_direct(..., digits=...)`),
  used when the value is many orders of magnitude below the size of the
  integrand and double precision cannot resolve it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import mpmath
import numpy as np

from .errors import DomainError, ParameterError, SingularityError
from .hypcore import EvalResult

_EPS = np.finfo(float).eps
# Safety valve for the breadth-first refinement of integrate_2d.
MAX_ACTIVE_RECTS = 40_000


@dataclass(frozen=True)
class QuadratureSpec:
    nodes_per_panel: int = 10
    initial_panels: int = 4
    tol: float = 1e-12
    max_depth: int = 30

    def __post_init__(self):
        if self.nodes_per_panel < 4:
            raise ParameterError("nodes_per_panel must be >= 4")
        if self.initial_panels < 1:
            raise ParameterError("initial_panels must be >= 1")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if not 0 <= self.max_depth <= 40:
            raise ParameterError("max_depth must be in 0..40")


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class XiOrder:
    """Rank and multi-order of a Xi-function; rank-2 orders are stored sorted."""

    rank: int
    orders: tuple

    def __post_init__(self):
        orders = tuple(int(k) for k in self.orders)
        if self.rank not in (1, 2):
            raise ParameterError(f"rank must be 1 or 2, got {self.rank}")
        if len(orders) != self.rank:
            raise ParameterError(f"rank {self.rank} needs {self.rank} orders, got {orders}")
        if any(k < 0 for k in orders):
            raise ParameterError("orders must be non-negative")
        object.__setattr__(self, "orders", tuple(sorted(orders)))

    @classmethod
    def of(cls, *orders: int) -> "XiOrder":
        return cls(len(orders), tuple(orders))

    @property
    def is_zero(self) -> bool:
        return all(k == 0 for k in self.orders)

    def zero(self) -> "XiOrder":
        return XiOrder(self.rank, (0,) * self.rank)

    def __str__(self) -> str:
        return ",".join(str(k) for k in self.orders)


@dataclass(frozen=True)
class CylindricalParams:
    order: int
    offset: float
    argument: float

    def __post_init__(self):
        if self.order < 0 or int(self.order) != self.order:
            raise ParameterError("order must be a non-negative integer")
        if self.offset < 0 or self.argument < 0:
            raise ParameterError("offset and argument must be non-negative")
        if self.offset == 0 and self.argument == 1:
            raise DomainError("psi is singular at offset 0, argument 1")


# ---------------------------------------------------------------------------
# 1D / 2D adaptive Gauss-Legendre


@lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _initial_edges(a: float, b: float, panels: int, points: Sequence[float]) -> np.ndarray:
    edges = set(np.linspace(a, b, panels + 1).tolist())
    edges.update(p for p in points if a < p < b)
    return np.array(sorted(edges))


def integrate_1d(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                 spec: QuadratureSpec = DEFAULT_SPEC,
                 points: Sequence[float] = ()) -> EvalResult:
    """Adaptive composite Gauss-Legendre estimate of the integral of f over [a, b].

    `f` must accept a numpy array.  Each panel is compared with its two
    halves; panels whose difference exceeds their share of
    ``tol * integral(|f|)`` are split.  ``abs_error`` is the sum of those
    differences over the accepted panels plus a rounding floor.
    """
    if not a < b:
        raise ParameterError("integrate_1d needs a < b")
    xg, wg = _gauss_legendre(spec.nodes_per_panel)
    edges = _initial_edges(a, b, spec.initial_panels, points)
    lo, hi = edges[:-1], edges[1:]
    accepted: list[np.ndarray] = []
    err_total = 0.0
    abs_total = 0.0
    scale = None
    evals = 0
    forced = False
    depth = 0
    length = b - a
    while lo.size:
        mid = 0.5 * (lo + hi)
        segs_lo = np.concatenate([lo, lo, mid])
        segs_hi = np.concatenate([hi, mid, hi])
        half = 0.5 * (segs_hi - segs_lo)
        nodes = (segs_lo + segs_hi)[:, None] * 0.5 + half[:, None] * xg[None, :]
        vals = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
        evals += vals.size
        q = (vals * wg[None, :]).sum(axis=1) * half
        qa = (np.abs(vals) * wg[None, :]).sum(axis=1) * half
        k = lo.size
        coarse = q[:k]
        fine = q[k:2 * k] + q[2 * k:]
        fine_abs = qa[k:2 * k] + qa[2 * k:]
        if scale is None:
            scale = max(float(fine_abs.sum()), np.finfo(float).tiny)
        diff = np.abs(fine - coarse)
        width = hi - lo
        local = spec.tol * scale * width / length
        # panels so narrow that their abscissae are only known to a relative
        # accuracy eps * |center| / width cannot be resolved further
        floor = 8 * _EPS * np.maximum(np.abs(lo), np.abs(hi)) / width * fine_abs
        ok = diff <= np.maximum(local, floor)
        if depth >= spec.max_depth:
            # forced acceptance; judged below against the global budget
            forced |= not ok.all()
            ok[:] = True
        accepted.append(fine[ok])
        err_total += float(diff[ok].sum())
        abs_total += float(fine_abs[ok].sum())
        lo, hi, mid = lo[~ok], hi[~ok], mid[~ok]
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
        depth += 1
    value = math.fsum(np.concatenate(accepted)) if accepted else 0.0
    err = err_total + 8 * _EPS * abs_total
    converged = not forced or err <= spec.tol * abs_total
    return EvalResult(value, err, evals, converged)


def _tensor(lo0, hi0, lo1, hi1, xg, wg):
    """Tensor Gauss nodes for many rectangles: returns (X, Y, W) with shape (m, n*n)."""
    h0 = 0.5 * (hi0 - lo0)
    h1 = 0.5 * (hi1 - lo1)
    x = (0.5 * (lo0 + hi0))[:, None] + h0[:, None] * xg[None, :]
    y = (0.5 * (lo1 + hi1))[:, None] + h1[:, None] * xg[None, :]
    n = xg.size
    X = np.repeat(x, n, axis=1)
    Y = np.tile(y, (1, n))
    W = np.outer(wg, wg).ravel()[None, :] * (h0 * h1)[:, None]
    return X, Y, W


def integrate_2d(f: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 rect: tuple[tuple[float, float], tuple[float, float]],
                 spec: QuadratureSpec = DEFAULT_SPEC,
                 points: tuple[Sequence[float], Sequence[float]] = ((), ())) -> EvalResult:
    """Adaptive tensor-product Gauss-Legendre over a rectangle.

    Each rectangle is compared with its halves along either axis; the axis
    whose halving changes the estimate more is the one that gets split.
    """
    (a0, b0), (a1, b1) = rect
    if not (a0 < b0 and a1 < b1):
        raise ParameterError("integrate_2d needs a non-degenerate rectangle")
    xg, wg = _gauss_legendre(spec.nodes_per_panel)
    e0 = _initial_edges(a0, b0, spec.initial_panels, points[0])
    e1 = _initial_edges(a1, b1, spec.initial_panels, points[1])
    L0, L1 = np.meshgrid(e0[:-1], e1[:-1], indexing="ij")
    H0, H1 = np.meshgrid(e0[1:], e1[1:], indexing="ij")
    lo0, hi0, lo1, hi1 = L0.ravel(), H0.ravel(), L1.ravel(), H1.ravel()
    depth = np.zeros(lo0.size, dtype=int)
    area_total = (b0 - a0) * (b1 - a1)
    accepted: list[np.ndarray] = []
    err_total = 0.0
    abs_total = 0.0
    scale = None
    evals = 0
    converged = True

    def quad(l0, h0, l1, h1):
        X, Y, W = _tensor(l0, h0, l1, h1, xg, wg)
        v = np.asarray(f(X, Y), dtype=float).reshape(X.shape)
        return (v * W).sum(axis=1), (np.abs(v) * W).sum(axis=1), v.size

    while lo0.size:
        m0 = 0.5 * (lo0 + hi0)
        m1 = 0.5 * (lo1 + hi1)
        k = lo0.size
        q, qa, n_ev = quad(
            np.concatenate([lo0, lo0, m0, lo0, lo0]),
            np.concatenate([hi0, m0, hi0, hi0, hi0]),
            np.concatenate([lo1, lo1, lo1, lo1, m1]),
            np.concatenate([hi1, hi1, hi1, m1, hi1]))
        evals += n_ev
        base = q[:k]
        split0 = q[k:2 * k] + q[2 * k:3 * k]
        split1 = q[3 * k:4 * k] + q[4 * k:]
        abs0 = qa[k:2 * k] + qa[2 * k:3 * k]
        if scale is None:
            scale = max(float(abs0.sum()), np.finfo(float).tiny)
        d0 = np.abs(split0 - base)
        d1 = np.abs(split1 - base)
        area = (hi0 - lo0) * (hi1 - lo1)
        local = spec.tol * scale * area / area_total
        ok = np.maximum(d0, d1) <= local
        at_limit = depth >= spec.max_depth
        if (~ok & at_limit).any():
            converged = False
        ok |= at_limit
        if (~ok).sum() * 2 > MAX_ACTIVE_RECTS:
            converged = False
            ok[:] = True
        value = np.where(d0 >= d1, split0, split1)
        accepted.append(value[ok])
        err_total += float(np.maximum(d0, d1)[ok].sum())
        abs_total += float(abs0[ok].sum())
        nk = ~ok
        along0 = (d0 >= d1)[nk]
        l0, h0, l1, h1, mm0, mm1, dp = lo0[nk], hi0[nk], lo1[nk], hi1[nk], m0[nk], m1[nk], depth[nk]
        # children: split axis 0 where along0, else axis 1
        c_lo0 = np.concatenate([l0, np.where(along0, mm0, l0)])
        c_hi0 = np.concatenate([np.where(along0, mm0, h0), h0])
        c_lo1 = np.concatenate([l1, np.where(along0, l1, mm1)])
        c_hi1 = np.concatenate([np.where(along0, h1, mm1), h1])
        lo0, hi0, lo1, hi1 = c_lo0, c_hi0, c_lo1, c_hi1
        depth = np.concatenate([dp, dp]) + 1
    value = math.fsum(np.concatenate(accepted)) if accepted else 0.0
    return EvalResult(value, err_total + 8 * _EPS * abs_total, evals, converged)


# ---------------------------------------------------------------------------
# defining integrals


def _graded_points(gap: float, upper: float = math.pi) -> list[float]:
    """Breakpoints upper/2, upper/4, ... down to about `gap`, for peaks at 0."""
    if gap <= 0:
        gap = 1e-12
    levels = int(min(30, max(0, math.ceil(math.log2(upper / gap)) + 1)))
    return [upper * 0.5 ** j for j in range(1, levels + 1)]


def _check_x(x: float) -> None:
    if not 0 <= x < 1:
        raise DomainError(f"Xi is defined for 0 <= x < 1, got x={x}")


def xi_integrand(order: XiOrder, x: float):
    """The integrand of the defining N-fold integral (without the 1/(2N) factor).

    The radicand is written as (1-x)^2 + (4x/N) sum sin^2(theta/2), which
    avoids cancellation when x is close to 1 and theta close to 0.
    """
    if order.rank == 1:
        (k,) = order.orders

        def f(t):
            return np.cos(k * t) / np.sqrt((1 - x) ** 2 + 4 * x * np.sin(0.5 * t) ** 2)
        return f
    k1, k2 = order.orders

    def g(t1, t2):
        rad = (1 - x) ** 2 + 2 * x * (np.sin(0.5 * t1) ** 2 + np.sin(0.5 * t2) ** 2)
        return np.cos(k1 * t1) * np.cos(k2 * t2) / np.sqrt(rad)
    return g


def xi_direct(order: XiOrder, x: float, spec: QuadratureSpec = DEFAULT_SPEC, *,
              digits: int | None = None) -> EvalResult:
    """Xi_N^[k](x) by direct quadrature of its defining integral.

    With ``digits`` set the periodic trapezoidal rule is run in mpmath at that
    precision, doubling the node count until two estimates agree.
    """
    _check_x(x)
    if digits is not None:
        return _xi_trapezoid(order, x, digits)
    pts = _graded_points(1 - x)
    f = xi_integrand(order, x)
    if order.rank == 1:
        r = integrate_1d(f, 0.0, math.pi, spec, pts)
    else:
        r = integrate_2d(f, ((0.0, math.pi), (0.0, math.pi)), spec, (pts, pts))
    c = 1.0 / (2 * order.rank)
    return EvalResult(c * r.value, c * r.abs_error, r.terms_used, r.converged)


def xi_reference(order: XiOrder, x: float, spec: QuadratureSpec | None = None,
                 rel_tol: float = 1e-10, digits: int = 25) -> EvalResult:
    """Oracle value resolved to ``rel_tol`` relative accuracy.

    Double-precision quadrature is tried first.  Its error is relative to the
    size of the integrand, so small values (high orders, small x) fall back to
    the extended-precision trapezoidal rule.
    """
    r = xi_direct(order, x, spec or DEFAULT_SPEC)
    if r.converged and r.abs_error <= rel_tol * abs(r.value):
        return r
    return xi_direct(order, x, digits=digits)


def _xi_trapezoid(order: XiOrder, x: float, digits: int, max_nodes: int | None = None):
    if max_nodes is None:
        max_nodes = 8192 if order.rank == 1 else 1024
    with mpmath.workdps(digits + 5):
        X = mpmath.mpf(x)
        target = mpmath.mpf(10) ** (-digits + 4)
        prev = None
        m = 16
        evals = 0
        while True:
            h = mpmath.pi / m
            th = [h * i for i in range(m + 1)]
            half_sin2 = [mpmath.sin(t / 2) ** 2 for t in th]
            w = [mpmath.mpf(1)] * (m + 1)
            w[0] = w[-1] = mpmath.mpf(1) / 2
            d = (1 - X) ** 2
            if order.rank == 1:
                (k,) = order.orders
                terms = [w[i] * mpmath.cos(k * th[i]) / mpmath.sqrt(d + 4 * X * half_sin2[i])
                         for i in range(m + 1)]
                total = mpmath.fsum(terms) * h / 2
                evals += m + 1
            else:
                k1, k2 = order.orders
                A = [w[i] * mpmath.cos(k1 * th[i]) for i in range(m + 1)]
                B = [w[i] * mpmath.cos(k2 * th[i]) for i in range(m + 1)]
                s2 = [2 * X * v for v in half_sin2]
                rows = []
                for i in range(m + 1):
                    ci = d + s2[i]
                    rows.append(A[i] * mpmath.fsum(B[j] / mpmath.sqrt(ci + s2[j])
                                                   for j in range(m + 1)))
                total = mpmath.fsum(rows) * h * h / 4
                evals += (m + 1) ** 2
            if prev is not None:
                diff = abs(total - prev)
                if diff <= target * abs(total) or diff == 0:
                    return EvalResult(float(total), float(diff), evals, True)
            if 2 * m > max_nodes:
                return EvalResult(float(total), float(abs(total - prev)), evals, False)
            prev = total
            m *= 2


def z_direct(order: XiOrder, r: float, rho: float,
             spec: QuadratureSpec = DEFAULT_SPEC) -> EvalResult:
    """The two-point kernel Z_N^[k](r, rho) by direct N-fold quadrature."""
    if r < 0 or rho < 0:
        raise DomainError("radii must be non-negative")
    if r == rho:
        raise SingularityError("Z is singular on the diagonal r == rho")
    n = order.rank
    big = max(r, rho)
    pts = _graded_points(abs(r - rho) / big)
    dd = (r - rho) ** 2
    c = 4 * r * rho / n
    if n == 1:
        (k,) = order.orders
        return integrate_1d(
            lambda t: np.cos(k * t) / np.sqrt(dd + c * np.sin(0.5 * t) ** 2),
            0.0, math.pi, spec, pts)
    k1, k2 = order.orders
    return integrate_2d(
        lambda t1, t2: np.cos(k1 * t1) * np.cos(k2 * t2)
        / np.sqrt(dd + c * (np.sin(0.5 * t1) ** 2 + np.sin(0.5 * t2) ** 2)),
        ((0.0, math.pi), (0.0, math.pi)), spec, (pts, pts))


def a_direct(l: int, k1: int, k2: int, spec: QuadratureSpec = DEFAULT_SPEC) -> EvalResult:
    """Double integral of (cos t1 + cos t2)^l cos(k1 t1) cos(k2 t2) over [0, pi]^2."""
    return integrate_2d(
        lambda t1, t2: (np.cos(t1) + np.cos(t2)) ** l * np.cos(k1 * t1) * np.cos(k2 * t2),
        ((0.0, math.pi), (0.0, math.pi)), spec)


def psi_cyl(p: CylindricalParams, spec: QuadratureSpec = DEFAULT_SPEC) -> EvalResult:
    """Integral over [0, 2 pi] of cos(k t) / sqrt(1 + zeta^2 + x^2 - 2 x cos t)."""
    k, zeta, x = p.order, p.offset, p.argument
    base = (1 - x) ** 2 + zeta ** 2
    gap = math.sqrt(base) / max(x, 1e-300) if x > 0 else 1.0
    pts = _graded_points(gap)
    r = integrate_1d(
        lambda t: np.cos(k * t) / np.sqrt(base + 4 * x * np.sin(0.5 * t) ** 2),
        0.0, math.pi, spec, pts)
    return EvalResult(2 * r.value, 2 * r.abs_error, r.terms_used, r.converged)


# ---------------------------------------------------------------------------
# exact expansions (independent of the closed forms they are checked against)


def cos_power_moment(p: int, k: int) -> Fraction:
    """Integral over [0, pi] of cos^p(t) cos(k t), as a multiple of pi."""
    if p < k or (p - k) % 2:
        return Fraction(0)
    return Fraction(math.comb(p, (p - k) // 2), 2**p)


def a_expansion_exact(l: int, k1: int, k2: int) -> Fraction:
    """A_l(k1, k2) / pi^2 by binomial expansion of (cos t1 + cos t2)^l."""
    return sum((math.comb(l, s) * cos_power_moment(s, k1) * cos_power_moment(l - s, k2)
                for s in range(l + 1)), Fraction(0))


def _legendre_coefficients(n: int) -> list[tuple[int, Fraction]]:
    """P_n(y) = sum c * y^p, returned as (p, c) pairs."""
    out = []
    for j in range(n // 2 + 1):
        c = Fraction((-1) ** j * math.factorial(2 * n - 2 * j),
                     2**n * math.factorial(n - 2 * j) * math.factorial(n - j) * math.factorial(j))
        out.append((n - 2 * j, c))
    return out


def xi1_maclaurin_exact(k: int, n_max: int) -> list[Fraction]:
    """Coefficients e_n with Xi_1^[k](x) = pi * sum e_n x^n, from the Legendre expansion."""
    out = []
    for n in range(n_max + 1):
        acc = Fraction(0)
        for p, c in _legendre_coefficients(n):
            acc += c * cos_power_moment(p, k)
        out.append(acc / 2)
    return out


def xi2_maclaurin_exact(k1: int, k2: int, n_max: int) -> list[Fraction]:
    """Coefficients e_n with Xi_2^[k1,k2](x) = pi^2 * sum e_n x^n.

    Uses P_n((cos t1 + cos t2)/2) expanded in powers and the binomial
    expansion of each power integrated against the cosines.
    """
    cache: dict[int, Fraction] = {}
    out = []
    for n in range(n_max + 1):
        acc = Fraction(0)
        for p, c in _legendre_coefficients(n):
            if p not in cache:
                cache[p] = a_expansion_exact(p, k1, k2) / 2**p
            acc += c * cache[p]
        out.append(acc / 4)
    return out
