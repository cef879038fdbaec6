"""Identity verification suites with JSON-serialisable reports.

Each suite runs a fixed grid (or a seeded random draw) of cases, records the
residual of every case and compares the maximum with the suite tolerance.
"""

from __future__ import annotations

import math
import subprocess
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, hypcore, kernels, oracle, xi1, xi2
from .errors import ParameterError

SCHEMA_VERSION = 1
DEFAULT_SEED = 20180705

X_GRID = tuple(round(0.1 * i, 10) for i in range(1, 10))
RANK1_ORDERS = range(0, 11)
RANK2_MAX_ORDER = 6


@dataclass
class Case:
    params: dict
    residual: float
    passed: bool
    converged: bool = True
    note: str = ""


@dataclass
class Report:
    suite: str
    tolerance: float
    cases: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    seed: int | None = None

    def add(self, params: dict, residual: float, converged: bool = True,
            tol: float | None = None, note: str = "") -> None:
        limit = self.tolerance if tol is None else tol
        ok = bool(converged and math.isfinite(residual) and residual <= limit)
        self.cases.append(Case(params, float(residual), ok, bool(converged), note))

    @property
    def max_residual(self) -> float:
        return max((c.residual for c in self.cases), default=0.0)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    @property
    def converged(self) -> bool:
        return all(c.converged for c in self.cases)

    def to_dict(self) -> dict:
        """Plain-data report; non-finite numbers become None so the JSON stays strict."""
        failures = [asdict(c) for c in self.cases if not c.passed]
        return _finite({
            "schema_version": SCHEMA_VERSION,
            "suite": self.suite,
            "version": tool_version(),
            "tolerance": self.tolerance,
            "seed": self.seed,
            "n_cases": len(self.cases),
            "max_residual": self.max_residual,
            "passed": self.passed,
            "converged": self.converged,
            "failures": failures,
            "extra": self.extra,
            "cases": [asdict(c) for c in self.cases],
        })


def _finite(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def tool_version() -> str:
    """`git describe` of the source tree when available, else the package version."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5, check=True)
        desc = out.stdout.strip()
        if desc:
            return f"{__version__}+g{desc}" if not desc.startswith(__version__) else desc
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


# ---------------------------------------------------------------------------
# suites


def rank1_ode(**_) -> Report:
    rep = Report("rank1-ode", 1e-8)
    worst_variant = 0.0
    for k in RANK1_ORDERS:
        for x in X_GRID:
            r = xi1.xi1_ode_residual(k, x)
            rep.add({"k": k, "x": x}, r.value, r.converged)
            worst_variant = max(worst_variant, xi1.xi1_ode_residual(k, x, form="variant").value)
    rep.extra["form"] = "derived"
    rep.extra["variant_form_max_residual"] = worst_variant
    return rep


def rank1_ddr(**_) -> Report:
    rep = Report("rank1-ddr", 1e-8)
    for k in RANK1_ORDERS:
        for x in X_GRID:
            r = xi1.xi1_diffdiff_residual(k, x)
            rep.add({"k": k, "x": x}, r.value, r.converged)
    return rep


def rank2_ode(dps: int | None = None, **_) -> Report:
    rep = Report("rank2-ode", 1e-7)
    orders = [(k, k) for k in range(RANK2_MAX_ORDER + 1)]
    orders += [(k, k + 1) for k in range(RANK2_MAX_ORDER)]
    for k1, k2 in orders:
        for x in X_GRID:
            r = xi2.xi2_ode_residual((k1, k2), x, dps=dps)
            rep.add({"k1": k1, "k2": k2, "x": x, "form": "general"}, r.value, r.converged)
    for x in X_GRID:
        r = xi2.xi2_ode_residual((0, 0), x, form="lowest", dps=dps)
        rep.add({"k1": 0, "k2": 0, "x": x, "form": "lowest"}, r.value, r.converged)
    return rep


def rank2_ddr(dps: int | None = None, **_) -> Report:
    rep = Report("rank2-ddr", 1e-8)
    for k in range(RANK2_MAX_ORDER + 1):
        for x in X_GRID:
            r = xi2.xi2_diffdiff_residual(k, x, dps=dps)
            rep.add({"k": k, "x": x}, r.value, r.converged)
    return rep


def lemma1(**_) -> Report:
    """Exact closed form vs symbolic expansion (l <= 14), and vs 2D quadrature (l <= 10)."""
    rep = Report("lemma1", 1e-9)
    mismatches = 0
    for l in range(15):
        for k1 in range(l + 1):
            for k2 in range(l + 1 - k1):
                if xi2.a_closed(l, k1, k2).coefficient != oracle.a_expansion_exact(l, k1, k2):
                    mismatches += 1
                    rep.add({"l": l, "k1": k1, "k2": k2, "kind": "exact"}, math.inf)
    gap = 0.0
    for l in range(11):
        for k1 in range(6):
            for k2 in range(6):
                q = oracle.a_direct(l, k1, k2)
                d = abs(q.value - float(xi2.a_closed(l, k1, k2)))
                gap = max(gap, d)
                rep.add({"l": l, "k1": k1, "k2": k2, "kind": "quadrature"}, d, q.converged)
    rep.extra.update({"exact_mismatches": mismatches, "max_quadrature_gap": gap})
    return rep


def s_recurrence(**_) -> Report:
    rep = Report("s-recurrence", 0.0)
    for k1 in range(7):
        for k2 in range(7):
            for n in range(9):
                ok = xi2.s_sum_closed(k1, k2, n) == xi2.s_sum_direct(k1, k2, n)
                rep.add({"k1": k1, "k2": k2, "N": n, "kind": "closed"}, 0.0 if ok else 1.0)
            for n in range(11):
                ok = xi2.s_sum_recurrence_check(k1, k2, n)
                rep.add({"k1": k1, "k2": k2, "N": n, "kind": "recurrence"}, 0.0 if ok else 1.0)
    return rep


def contiguous_draws(seed: int, count: int = 100) -> list[tuple]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        a1, a2, a3, b1, b2 = rng.uniform(0.3, 4.0, 5)
        y = -rng.uniform(0.0, 0.9)
        while y == 0.0:
            y = -rng.uniform(0.0, 0.9)
        out.append(tuple(float(v) for v in (a1, a2, a3, b1, b2, y)))
    return out


def contiguous(seed: int = DEFAULT_SEED, dps: int | None = None, **_) -> Report:
    rep = Report("contiguous", 1e-10, seed=seed)
    for a1, a2, a3, b1, b2, y in contiguous_draws(seed):
        r = hypcore.contiguous_3f2_residual(a1, a2, a3, b1, b2, y, dps=dps)
        rep.add({"a1": a1, "a2": a2, "a3": a3, "b1": b1, "b2": b2, "y": y},
                r.value, r.converged)
    rep.extra["dps"] = dps
    return rep


def whipple_pattern(n: int, k1: int, k2: int) -> tuple:
    K = k1 + k2
    return (n, (K + 1) / 2, (K + 2) / 2, n + K + 0.5, k1 + 1, k2 + 1, K + 1)


def whipple(inject_unbalanced: bool = False, **_) -> Report:
    rep = Report("whipple", 1e-12)
    cases = [whipple_pattern(n, k1, k2) for n in range(13)
             for k1 in range(RANK2_MAX_ORDER + 1) for k2 in range(k1, RANK2_MAX_ORDER + 1)]
    if inject_unbalanced:
        n, A, B, C, E, F, G = whipple_pattern(5, 1, 3)
        cases.append((n, A, B, C + 1e-3, E, F, G))
    for n, A, B, C, E, F, G in cases:
        params = {"n": n, "A": A, "B": B, "C": C, "E": E, "F": F, "G": G}
        try:
            r = hypcore.whipple_4f3_residual(n, A, B, C, E, F, G)
            rep.add(params, r.value, r.converged)
        except ParameterError as exc:
            rep.add(params, math.inf, note=str(exc))
    return rep


def calibration(rank: int = 1, **_) -> Report:
    rep = Report("calibration", 1e-6)
    orders = xi1.CALIBRATION_ORDERS[rank]
    a = xi1.calibrate_normalization(rank, xi1.CALIBRATION_XS, orders)
    b = xi1.calibrate_normalization(rank, xi1.CALIBRATION_XS_ALT, orders)
    rep.add({"rank": rank, "set": "primary"}, a.spread)
    rep.add({"rank": rank, "set": "disjoint"}, b.spread)
    stability = abs(a.constant - b.constant) / a.constant
    rep.add({"rank": rank, "set": "stability"}, stability, tol=1e-8)
    rep.extra.update({"rank": rank, "constant": a.constant, "constant_disjoint": b.constant,
                      "spread": max(a.spread, b.spread), "stability": stability,
                      "constant_over_pi": a.constant / math.pi})
    return rep


def kernel_consistency(seed: int = DEFAULT_SEED, **_) -> Report:
    """Z from Xi-functions against the direct angular integral, plus assembly properties."""
    rep = Report("kernel-consistency", 1.0, seed=seed)
    rng = np.random.default_rng(seed)
    for rank in (1, 2):
        for _ in range(50):
            r, rho = (float(v) for v in rng.uniform(0.05, 2.0, 2))
            ks = tuple(int(v) for v in rng.integers(0, 5, rank))
            order = oracle.XiOrder.of(*ks)
            z = kernels.z_eval(order, r, rho)
            d = oracle.z_direct(order, r, rho)
            # residual in units of ten oracle error estimates
            rep.add({"rank": rank, "k": list(ks), "r": r, "rho": rho, "kind": "z"},
                    abs(z - d.value) / (10 * d.abs_error), d.converged)
    for rank, k in ((1, 0), (2, (0, 0))):
        m = kernels.assemble_operator(kernels.KernelDomain(rank), k, kernels.RadialField.constant(), 64)
        rep.add({"rank": rank, "kind": "self-adjoint"}, kernels.selfadjointness_check(m), tol=1e-10)
        rep.add({"rank": rank, "kind": "null-vector"}, kernels.null_residual(m), tol=1e-10)
    return rep


SUITES: dict[str, Callable[..., Report]] = {
    "rank1-ode": rank1_ode,
    "rank1-ddr": rank1_ddr,
    "rank2-ode": rank2_ode,
    "rank2-ddr": rank2_ddr,
    "lemma1": lemma1,
    "s-recurrence": s_recurrence,
    "contiguous": contiguous,
    "whipple": whipple,
    "calibration": calibration,
    "kernel-consistency": kernel_consistency,
}


def run_suite(name: str, **options) -> Report:
    if name not in SUITES:
        raise ParameterError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](**options)
