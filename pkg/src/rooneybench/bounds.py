"""Closed-form bound evaluators and assumption diagnostics.

The fast-learning lower bound uses the explicit constant
C = a1*(b-1) / (4*(a1+b)) and C1 = C / (a1+b); the slow-learning upper
bound uses C2 = 32*a1 / (a1-1). Bounds are reported raw: values outside
[0, 1] carry a vacuous flag instead of being clamped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

from scipy import integrate

from .core import (
    BiasDistributionSpec,
    ConstraintError,
    DomainError,
    ModelConfig,
    UtilityDistribution,
)

__all__ = [
    "BoundCurve",
    "thm1_lower",
    "thm2_upper",
    "n0_check",
    "tail_mass",
    "assumption_check_bias_family",
    "evaluate_bound_curve",
    "AssumptionReport",
]


def _c1(config: ModelConfig) -> float:
    c = config.a1 * (config.b - 1.0) / (4.0 * (config.a1 + config.b))
    return c / (config.a1 + config.b)


def thm1_lower(config: ModelConfig, t: int) -> float:
    """Fast-learning lower bound on E[beta^t] under the Rooney Rule."""
    if config.ell < 1:
        raise ConstraintError("lower bound applies only when ell >= 1")
    if t < 0:
        raise DomainError("t must be non-negative")
    expected_beta1 = config.a1 / (config.a1 + config.b)
    growth = 1.0 + _c1(config) * t * config.rho / (config.k - config.ell + 1.0)
    return (1.0 - (1.0 - expected_beta1) / growth) * (1.0 - math.exp(-t * config.rho / 16.0))


def thm2_upper(config: ModelConfig, t: int) -> float:
    """Slow-learning upper bound on E[beta^t] without the Rooney Rule."""
    if config.ell != 0:
        raise ConstraintError("upper bound applies only when ell = 0")
    if t < 0:
        raise DomainError("t must be non-negative")
    expected_beta1 = config.a1 / (config.a1 + config.b)
    c2 = 32.0 * config.a1 / (config.a1 - 1.0)
    return expected_beta1 + c2 * t * math.log(config.n) / (config.n * (1.0 - config.rho))


def n0_check(config: ModelConfig, t: int) -> bool:
    """Whether the population clears the proof's n-threshold at horizon t."""
    if config.ell != 0:
        raise ConstraintError("n0 check applies only when ell = 0")
    if t < 1:
        raise DomainError("t must be at least 1")
    lhs = (
        16.0
        * math.log(config.n)
        / (config.n * (1.0 - config.rho))
        * (config.a1 + config.b)
        / (config.a1 - 1.0)
    )
    return lhs <= 1.0 / t


def tail_mass(dist: UtilityDistribution, eps: float) -> float:
    """Probability that a draw lands within a (1-eps) factor of the supremum."""
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    threshold = (1.0 - eps) * dist.hi
    if threshold <= dist.lo:
        return 1.0
    if dist.kind == "uniform":
        return min(1.0, eps * dist.hi / (dist.hi - dist.lo))
    total, _ = integrate.quad(
        lambda x: float(dist.pdf_unnormalized(x)), dist.lo, dist.hi,
        epsabs=1e-12, limit=200,
    )
    tail, _ = integrate.quad(
        lambda x: float(dist.pdf_unnormalized(x)), threshold, dist.hi,
        epsabs=1e-12, limit=200,
    )
    return min(1.0, max(0.0, tail / total))


@dataclass(frozen=True)
class BoundEntry:
    t: int
    lower: Optional[float]
    upper: Optional[float]
    vacuous: bool
    n0_ok: Optional[bool]
    params: dict


@dataclass
class BoundCurve:
    """Per-iteration bound values; entries carry their inputs for audit."""

    entries: List[BoundEntry] = field(default_factory=list)

    @property
    def t_values(self) -> list:
        return [e.t for e in self.entries]

    @property
    def lower(self) -> list:
        return [e.lower for e in self.entries]

    @property
    def upper(self) -> list:
        return [e.upper for e in self.entries]

    @property
    def vacuous_flags(self) -> list:
        return [e.vacuous for e in self.entries]

    @property
    def n0_ok(self) -> bool:
        return all(e.n0_ok for e in self.entries if e.n0_ok is not None)


def evaluate_bound_curve(config: ModelConfig, ts: Sequence[int]) -> BoundCurve:
    """Theorem bound (lower for ell >= 1, upper for ell = 0) at each t."""
    curve = BoundCurve()
    params = {
        "n": config.n, "k": config.k, "ell": config.ell,
        "rho": config.rho, "a1": config.a1, "b": config.b,
    }
    for t in ts:
        if config.ell >= 1:
            value = thm1_lower(config, t)
            entry = BoundEntry(
                t=t, lower=value, upper=None,
                vacuous=not 0.0 <= value <= 1.0, n0_ok=None,
                params=dict(params, t=t),
            )
        else:
            value = thm2_upper(config, t)
            entry = BoundEntry(
                t=t, lower=None, upper=value,
                vacuous=value >= 1.0,
                n0_ok=n0_check(config, max(t, 1)),
                params=dict(params, t=t),
            )
        curve.entries.append(entry)
    return curve


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    details: dict


@dataclass
class AssumptionReport:
    checks: List[AssumptionCheck] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


def assumption_check_bias_family(
    spec: BiasDistributionSpec,
    grid: Sequence[float],
    b: float = 2.0,
    kl_pairs: Sequence[tuple] = ((5, 1),),
    c3: Optional[float] = None,
) -> AssumptionReport:
    """Diagnose the four bias-family assumptions on a grid of a-values.

    Checks: the expected bias increases in a, is midpoint-concave, the
    inverse moment is finite and decreasing, and the median inequality
    (1 - med(a)) / (med(a) + (k - ell)) > C3 / (a * (k - ell + 1)) holds
    for every supplied (k, ell) pair. C3 defaults to (b - 1) / 2.
    """
    grid = list(grid)
    if grid != sorted(grid):
        raise DomainError("grid must be sorted ascending")
    if any(a <= 1.0 for a in grid):
        raise DomainError("grid values must exceed 1")
    if c3 is None:
        c3 = (b - 1.0) / 2.0

    report = AssumptionReport()

    def evaluate(fn: Callable[[float], float], label: str) -> list:
        values = []
        for a in grid:
            try:
                values.append(float(fn(a)))
            except Exception as exc:  # evaluator failure is a per-point finding
                report.failures.append(f"{label} failed at a={a}: {exc}")
                values.append(math.nan)
        return values

    phi_values = evaluate(lambda a: spec.mean(a, b), "phi")
    med_values = evaluate(lambda a: spec.median(a, b), "median")
    inv_values = evaluate(lambda a: spec.inverse_moment(a, b), "inverse moment")

    increasing = all(
        v2 > v1 for v1, v2 in zip(phi_values, phi_values[1:])
        if not (math.isnan(v1) or math.isnan(v2))
    )
    report.checks.append(AssumptionCheck(
        name="phi-increasing", passed=increasing,
        details={"grid": grid, "phi": phi_values},
    ))

    concave_checks = []
    for i in range(len(grid)):
        for j in range(i + 1, len(grid)):
            mid_a = 0.5 * (grid[i] + grid[j])
            try:
                mid_phi = float(spec.mean(mid_a, b))
            except Exception as exc:
                report.failures.append(f"phi failed at a={mid_a}: {exc}")
                continue
            ok = mid_phi >= 0.5 * (phi_values[i] + phi_values[j]) - 1e-12
            concave_checks.append(ok)
    concave = all(concave_checks) if concave_checks else False
    report.checks.append(AssumptionCheck(
        name="phi-concave", passed=concave, details={"grid": grid},
    ))

    finite = all(math.isfinite(v) for v in inv_values)
    decreasing = all(
        v2 < v1 for v1, v2 in zip(inv_values, inv_values[1:])
        if math.isfinite(v1) and math.isfinite(v2)
    )
    report.checks.append(AssumptionCheck(
        name="inverse-moment-finite-decreasing",
        passed=finite and decreasing,
        details={"grid": grid, "inverse_moment": inv_values},
    ))

    median_ok = True
    median_details = []
    for k, ell in kl_pairs:
        for a, med in zip(grid, med_values):
            if math.isnan(med):
                median_ok = False
                continue
            lhs = (1.0 - med) / (med + (k - ell))
            rhs = c3 / (a * (k - ell + 1.0))
            median_details.append({"a": a, "k": k, "ell": ell, "lhs": lhs, "rhs": rhs})
            if not lhs > rhs:
                median_ok = False
    report.checks.append(AssumptionCheck(
        name="median-inequality", passed=median_ok,
        details={"c3": c3, "points": median_details},
    ))
    return report
