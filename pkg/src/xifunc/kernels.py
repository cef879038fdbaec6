"""Kernels Z_N from Xi-functions and Nystrom discretisation of the partial operators.

The partial operator of order k acts on radial profiles by

    (K u)(r) = C * int_{R0}^{R} rho^(2N-1) [u(r) phi(rho) Z^0(r, rho)
                                            - u(rho) phi(r) Z^k(r, rho)] d rho

with Z^k(r, rho) = 2N / max(r, rho) * Xi_N^[k](min(r, rho) / max(r, rho)).

The kernel has a logarithmic (N=1) or kink-type (N=2) singularity on the
diagonal.  Assembly subtracts it: the second term is written as
int rho^(2N-1) (u(rho) - u(r)) Z^k d rho + u(r) g_k(r), where
g_k(r) = int rho^(2N-1) Z^k(r, rho) d rho is computed by adaptive quadrature
with the diagonal as a breakpoint, and the remainder vanishes on the
diagonal so the plain mesh rule is accurate for it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import oracle, xi1, xi2
from .errors import DomainError, ParameterError, SingularityError, SymmetryError, ValidationError
from .oracle import QuadratureSpec, XiOrder

PREFACTORS = ("decomposition", "paper")
NODES_PER_PANEL = 8
SYMMETRY_TOL = 1e-10
# Diagonal integrals g_k and q need far less than machine accuracy to keep the
# discretisation error dominant; this keeps assembly of 400 nodes in seconds.
DIAGONAL_SPEC = QuadratureSpec(nodes_per_panel=10, initial_panels=2, tol=1e-11, max_depth=40)


def as_order(rank: int, k) -> XiOrder:
    if isinstance(k, XiOrder):
        if k.rank != rank:
            raise ParameterError(f"order {k} does not have rank {rank}")
        return k
    if np.ndim(k) == 0:
        if rank != 1:
            raise ParameterError("rank-2 operators need an order pair (k1, k2)")
        k = (int(k),)
    return XiOrder(rank, tuple(k))


def operator_prefactor(rank: int, kind: str = "decomposition") -> float:
    """Constant C in front of the radial integral.

    ``decomposition`` is 2^N, what separating e^{i<k,Theta>} from the full
    operator on [0, 2 pi)^N yields; ``paper`` is (2N-1) / (2^N N! sqrt(N)).
    """
    if kind == "decomposition":
        return float(2 ** rank)
    if kind == "paper":
        return (2 * rank - 1) / (2 ** rank * math.factorial(rank) * math.sqrt(rank))
    raise ParameterError(f"prefactor must be one of {PREFACTORS}")


# ---------------------------------------------------------------------------
# domain and field


@dataclass(frozen=True)
class KernelDomain:
    rank: int
    r_inner: float = 0.0
    r_outer: float = 1.0

    def __post_init__(self):
        if self.rank not in (1, 2):
            raise ParameterError("rank must be 1 or 2")
        if self.r_inner < 0 or not self.r_outer > self.r_inner:
            raise ParameterError("need 0 <= r_inner < r_outer")


@dataclass(frozen=True)
class RadialField:
    """A positive radial field, either a vectorised callable or linear interpolation of samples."""

    func: Callable[[np.ndarray], np.ndarray] | None = None
    samples: tuple | None = None
    phi_min: float | None = None
    label: str = "field"

    @classmethod
    def constant(cls, value: float = 1.0) -> "RadialField":
        if not value > 0:
            raise ValidationError("constant field must be positive")
        return cls(func=lambda r: np.full(np.shape(r), float(value)), label=f"constant {value:g}")

    @classmethod
    def from_samples(cls, r: Sequence[float], phi: Sequence[float], label: str = "samples") -> "RadialField":
        r = np.asarray(r, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if r.ndim != 1 or r.shape != phi.shape or r.size < 2:
            raise ValidationError("field samples need matching 1-D r and phi with >= 2 points")
        if not np.all(np.isfinite(r)) or not np.all(np.isfinite(phi)):
            raise ValidationError("field samples must be finite")
        if np.any(np.diff(r) <= 0):
            raise ValidationError("field sample radii must be strictly increasing")
        if np.any(phi <= 0):
            raise ValidationError(f"field must be positive, min sample {phi.min():g}")
        r.setflags(write=False)
        phi.setflags(write=False)
        return cls(samples=(r, phi), label=label)

    @classmethod
    def from_csv(cls, path: str) -> "RadialField":
        """Two-column CSV (r, phi); a non-numeric first row is taken as a header."""
        rows = []
        try:
            with open(path, newline="") as fh:
                for i, row in enumerate(csv.reader(fh)):
                    if not row or row[0].lstrip().startswith("#"):
                        continue
                    try:
                        rows.append((float(row[0]), float(row[1])))
                    except (ValueError, IndexError):
                        if i == 0 and not rows:
                            continue
                        raise ValidationError(f"{path}: bad field row {i + 1}: {row}")
        except OSError as exc:
            raise ValidationError(f"cannot read field file {path}: {exc}") from exc
        if not rows:
            raise ValidationError(f"{path}: no field samples")
        r, phi = zip(*rows)
        return cls.from_samples(r, phi, label=path)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.samples is not None:
            rs, ps = self.samples
            return np.interp(r, rs, ps)
        return np.asarray(self.func(r), dtype=float)

    def lipschitz(self, grid: np.ndarray) -> float:
        v = self(grid)
        return float(np.max(np.abs(np.diff(v) / np.diff(grid)))) if grid.size > 1 else 0.0

    def validate(self, domain: KernelDomain, grid_points: int = 512) -> float:
        """Check positivity and finiteness on the domain; returns the observed minimum."""
        if self.samples is not None:
            rs = self.samples[0]
            if rs[0] > domain.r_inner or rs[-1] < domain.r_outer:
                raise ValidationError(
                    f"field samples cover [{rs[0]:g}, {rs[-1]:g}], domain is "
                    f"[{domain.r_inner:g}, {domain.r_outer:g}]")
        grid = np.linspace(domain.r_inner, domain.r_outer, grid_points)
        v = self(grid)
        if not np.all(np.isfinite(v)):
            raise ValidationError("field is not finite on the domain")
        lo = float(v.min())
        floor = self.phi_min if self.phi_min is not None else 0.0
        if lo <= 0 or lo < floor:
            raise ValidationError(f"field is not bounded away from zero (min {lo:g})")
        if not math.isfinite(self.lipschitz(grid)):
            raise ValidationError("field has no finite Lipschitz estimate on the grid")
        return lo


# ---------------------------------------------------------------------------
# kernel evaluation


def _norm_scale(rank: int, norm) -> float:
    if norm is None:
        norm = "calibrated"
    return xi1.resolve(norm, rank).scale


def xi_values(order: XiOrder, xs, norm=None, gap=None) -> np.ndarray:
    """Vectorised Xi_N^[k] for N = 1, 2 (calibrated normalization by default)."""
    scale = _norm_scale(order.rank, norm)
    if order.rank == 1:
        return scale * xi1.xi1_values(order.orders[0], xs, gap=gap)
    return scale * xi2.xi2_values(xi2.Rank2Order(*order.orders), xs)


def z_values(order: XiOrder, r, rho, norm=None) -> np.ndarray:
    """Z_N^[k](r, rho) elementwise; the diagonal r == rho is rejected."""
    r, rho = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(rho, dtype=float))
    if np.any(r < 0) or np.any(rho < 0):
        raise DomainError("radii must be non-negative")
    big = np.maximum(r, rho)
    small = np.minimum(r, rho)
    if np.any(big == 0):
        raise DomainError("Z is undefined at r = rho = 0")
    if np.any(small == big):
        raise SingularityError("Z is singular on the diagonal r == rho")
    # big - small is exact for nearby radii, unlike 1 - small / big
    return 2 * order.rank / big * xi_values(order, small / big, norm, (big - small) / big)


def z_eval(order: XiOrder, r: float, rho: float, norm=None) -> float:
    """Scalar Z_N^[k](r, rho) = 2N / max(r, rho) * Xi_N(min / max)."""
    if r < 0 or rho < 0:
        raise DomainError("radii must be non-negative")
    if r == rho == 0:
        raise DomainError("Z is undefined at r = rho = 0")
    if r == rho:
        raise SingularityError("Z is singular on the diagonal r == rho")
    big, small = max(r, rho), min(r, rho)
    x = small / big
    scale = _norm_scale(order.rank, norm)
    if order.rank == 1:
        xi = xi1.xi1_series(order.orders[0], x).value
    else:
        xi = xi2.xi2_series(xi2.Rank2Order(*order.orders), x).value
    return 2 * order.rank / big * scale * xi


# ---------------------------------------------------------------------------
# assembly


def composite_mesh(a: float, b: float, n: int, per_panel: int = NODES_PER_PANEL):
    """n Gauss-Legendre nodes on equal panels of [a, b]; returns (nodes, weights, panel edges)."""
    if n < per_panel:
        raise ParameterError(f"need at least {per_panel} nodes, got {n}")
    sizes = [len(c) for c in np.array_split(np.arange(n), n // per_panel)]
    edges = np.linspace(a, b, len(sizes) + 1)
    nodes, weights = [], []
    for (lo, hi), m in zip(zip(edges[:-1], edges[1:]), sizes):
        x, w = oracle._gauss_legendre(m)
        nodes.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * x)
        weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights), edges


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KernelMatrix:
    """Dense Nystrom matrix of a partial operator together with its mesh.

    ``weights`` already include the measure rho^(2N-1); the operator is
    symmetric in <u, v> = sum weights * u * v / phi.
    """

    nodes: np.ndarray
    weights: np.ndarray
    phi: np.ndarray
    matrix: np.ndarray
    order: XiOrder
    rank: int
    prefactor: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = self.nodes.shape[0]
        for name in ("nodes", "weights", "phi", "matrix"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if self.weights.shape != (n,) or self.phi.shape != (n,) or self.matrix.shape != (n, n):
            raise ParameterError("inconsistent KernelMatrix shapes")
        if np.any(self.phi <= 0):
            raise ValidationError("field samples must be positive")

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def metric(self) -> np.ndarray:
        """Diagonal of the weighted inner product, w_i / phi_i."""
        return self.weights / self.phi

    def apply(self, u) -> np.ndarray:
        return self.matrix @ np.asarray(u, dtype=float)

    def with_matrix(self, matrix: np.ndarray) -> "KernelMatrix":
        return KernelMatrix(self.nodes, self.weights, self.phi, matrix, self.order,
                            self.rank, self.prefactor, dict(self.meta))

    def to_csv_rows(self) -> list[list[str]]:
        header = ["r", "weight", "phi"] + [f"A{j}" for j in range(self.n_nodes)]
        rows = [header]
        for i in range(self.n_nodes):
            rows.append([format(v, ".17g") for v in
                         (self.nodes[i], self.weights[i], self.phi[i], *self.matrix[i])])
        return rows


def _graded_around(r: float, a: float, b: float, levels: int = 30) -> list[float]:
    pts = [r]
    for side in (a, b):
        gap = abs(side - r)
        if gap == 0:
            continue
        for j in range(1, levels + 1):
            pts.append(r + (side - r) * 0.5 ** j)
    return sorted(p for p in pts if a < p < b)


def diagonal_integral(order: XiOrder, r: float, domain: KernelDomain,
                      weight: Callable[[np.ndarray], np.ndarray] | None = None,
                      norm=None, spec: QuadratureSpec = DIAGONAL_SPEC):
    """int_{R0}^{R} rho^(2N-1) weight(rho) Z^k(r, rho) d rho by adaptive quadrature."""
    p = 2 * domain.rank - 1

    def f(rho):
        # deep refinement can land a node on the diagonal itself; that single
        # point carries no weight, so it contributes zero
        out = np.zeros_like(rho)
        ok = rho != r
        out[ok] = rho[ok] ** p * z_values(order, r, rho[ok], norm)
        if weight is not None:
            out = out * weight(rho)
        return out

    pts = _graded_around(r, domain.r_inner, domain.r_outer)
    return oracle.integrate_1d(f, domain.r_inner, domain.r_outer, spec, pts)


def assemble_operator(domain: KernelDomain, k, phi: RadialField, n_nodes: int,
                      norm=None, *, prefactor: str = "decomposition",
                      spec: QuadratureSpec = DIAGONAL_SPEC) -> KernelMatrix:
    """Nystrom matrix of the partial operator of order k on an n-node composite mesh.

    Off-diagonal entries are -C phi_i w_j Z^k_ij.  The diagonal collects the
    multiplicative term C q_i with q_i = int rho^(2N-1) phi Z^0(r_i, .) and
    the singularity-subtraction correction C phi_i (sum_{j != i} w_j Z^k_ij - g_k(r_i)).
    """
    order = as_order(domain.rank, k)
    phi.validate(domain)
    nodes, gl_w, _ = composite_mesh(domain.r_inner, domain.r_outer, n_nodes)
    w = gl_w * nodes ** (2 * domain.rank - 1)
    f = phi(nodes)
    C = operator_prefactor(domain.rank, prefactor)

    R, P = np.meshgrid(nodes, nodes, indexing="ij")
    off = ~np.eye(n_nodes, dtype=bool)
    zk = np.zeros((n_nodes, n_nodes))
    zk[off] = z_values(order, R[off], P[off], norm)

    zero = order.zero()
    g = np.empty(n_nodes)
    q = np.empty(n_nodes)
    converged = True
    for i, r in enumerate(nodes):
        gi = diagonal_integral(order, r, domain, None, norm, spec)
        if order.is_zero and phi.samples is None and _is_constant(phi, domain):
            qi_val = float(f[i]) * gi.value
            qi_ok = True
        else:
            qi = diagonal_integral(zero, r, domain, phi, norm, spec)
            qi_val, qi_ok = qi.value, qi.converged
        g[i], q[i] = gi.value, qi_val
        converged &= gi.converged and qi_ok

    A = -C * f[:, None] * w[None, :] * zk
    A[np.diag_indices(n_nodes)] = C * (q - f * g + f * (zk @ w))
    meta = {"prefactor_kind": prefactor, "converged": bool(converged),
            "domain": domain, "field": phi.label}
    return KernelMatrix(nodes, w, f, A, order, domain.rank, C, meta)


def _is_constant(phi: RadialField, domain: KernelDomain) -> bool:
    v = phi(np.linspace(domain.r_inner, domain.r_outer, 64))
    return bool(np.all(v == v[0]))


# ---------------------------------------------------------------------------
# spectra


def symmetrized(m: KernelMatrix) -> np.ndarray:
    d = np.sqrt(m.metric)
    return d[:, None] * m.matrix / d[None, :]


def selfadjointness_check(m: KernelMatrix) -> float:
    """max |<A e_i, e_j> - <e_i, A e_j>| over indicator vectors, relative to max |<A e_i, e_j>|."""
    B = m.metric[:, None] * m.matrix
    scale = float(np.max(np.abs(B)))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(B - B.T))) / scale


def spectrum(m: KernelMatrix, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Eigenvalues (ascending) of the weighted-symmetrised matrix."""
    res = selfadjointness_check(m)
    if res > tol:
        raise SymmetryError(f"matrix is not self-adjoint in the weighted product (residual {res:.3e})")
    S = symmetrized(m)
    return np.linalg.eigvalsh(0.5 * (S + S.T))


def spectral_drift(coarse: np.ndarray, fine: np.ndarray, count: int = 5) -> float:
    """Largest change of the `count` lowest and highest eigenvalues, relative to the spectral radius."""
    count = min(count, coarse.size, fine.size)
    scale = max(np.max(np.abs(coarse)), np.max(np.abs(fine)))
    if scale == 0:
        return 0.0
    lo = np.abs(coarse[:count] - fine[:count])
    hi = np.abs(coarse[-count:] - fine[-count:])
    return float(max(lo.max(), hi.max()) / scale)


def null_residual(m: KernelMatrix) -> float:
    """|A 1|_inf relative to max |A|; small when constants lie in the numerical kernel."""
    scale = float(np.max(np.abs(m.matrix)))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(m.matrix.sum(axis=1)))) / scale


# ---------------------------------------------------------------------------
# direct multidimensional check of the partial-wave reduction


def full_operator_direct(rank: int, k, u: Callable, phi: Callable, r: float,
                         r_outer: float = 1.0, r_inner: float = 0.0,
                         spec: QuadratureSpec | None = None) -> oracle.EvalResult:
    """Action of the full operator on e^{i<k,Theta>} u(r), projected back, at radius r.

    Integrates rho^(2N-1) [u(r) phi(rho) - u(rho) prod cos(k_m s_m) phi(r)] / D
    over rho in [R0, R] and all angles in [0, 2 pi)^N, with
    D^2 = (r - rho)^2 + (4 r rho / N) sum sin^2(s_m / 2).  No Xi-function or
    Z series is used; the angular integrals are done by quadrature.
    """
    order = as_order(rank, k)
    spec = spec or QuadratureSpec(tol=1e-9, max_depth=40)
    ur, fr = float(u(np.array([r]))[0]), float(phi(np.array([r]))[0])
    p = 2 * rank - 1
    ks = order.orders

    def inner(rho: float) -> float:
        a = ur * float(phi(np.array([rho]))[0])
        b = float(u(np.array([rho]))[0]) * fr
        dd = (r - rho) ** 2
        c = 4 * r * rho / rank
        pts = oracle._graded_points(abs(r - rho) / max(r, rho), math.pi)
        # angles folded onto [0, pi]: the integrand is even about pi
        if rank == 1:
            res = oracle.integrate_1d(
                lambda s: (a - b * np.cos(ks[0] * s)) / np.sqrt(dd + c * np.sin(0.5 * s) ** 2),
                0.0, math.pi, spec, pts)
            return 2 * res.value
        res = oracle.integrate_2d(
            lambda s1, s2: (a - b * np.cos(ks[0] * s1) * np.cos(ks[1] * s2))
            / np.sqrt(dd + c * (np.sin(0.5 * s1) ** 2 + np.sin(0.5 * s2) ** 2)),
            ((0.0, math.pi), (0.0, math.pi)), spec, (pts, pts))
        return 4 * res.value

    def outer(rhos: np.ndarray) -> np.ndarray:
        return np.array([rho ** p * inner(rho) for rho in rhos])

    pts = _graded_around(r, r_inner, r_outer, levels=20)
    outer_spec = QuadratureSpec(nodes_per_panel=spec.nodes_per_panel, initial_panels=2,
                                tol=spec.tol, max_depth=spec.max_depth)
    return oracle.integrate_1d(outer, r_inner, r_outer, outer_spec, pts)
