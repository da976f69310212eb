"""Replicated simulation: expected-bias estimates, sweeps, bound comparison.

Replicates are embarrassingly parallel. Every replicate r draws from the
substream (seed, lane, r, t), so estimates are bit-identical regardless of
execution order or worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .bounds import evaluate_bound_curve
from .core import ConfigurationError, ConstraintError, ModelConfig
from .dynamics import iter_rounds

__all__ = [
    "BiasEstimate",
    "SweepResult",
    "BoundComparison",
    "estimate_expected_bias",
    "compare_bounds",
    "sweep",
    "long_horizon_probe",
    "SWEEP_AXES",
]

SWEEP_AXES = ("n", "k", "ell", "rho", "a1", "b")

# 95% two-sided normal quantile; beta is bounded so the normal
# approximation is safe at the replicate counts used here.
Z_95 = 1.959963984540054


@dataclass(frozen=True)
class BiasEstimate:
    """Monte Carlo estimate of E[beta^t] with a 95% CI halfwidth."""

    t: int
    mean_beta: float
    ci_halfwidth: float
    replicates: int


def _replicate_betas(config: ModelConfig, replicate: int, ts: Sequence[int]) -> np.ndarray:
    """Beta draws of one trajectory at the requested 1-based rounds."""
    wanted = set(ts)
    last = max(ts)
    out = np.empty(len(ts))
    positions = {t: i for i, t in enumerate(ts)}
    run_config = config if config.horizon >= last else replace(config, horizon=last)
    for record in iter_rounds(run_config, replicate=replicate):
        if record.t in wanted:
            out[positions[record.t]] = record.beta
        if record.t >= last:
            break
    return out


def _run_replicate(config: ModelConfig, replicate: int, ts: Sequence[int]) -> np.ndarray:
    try:
        return _replicate_betas(config, replicate, ts)
    except Exception as exc:
        raise type(exc)(f"replicate {replicate}: {exc}") from exc


def _replicate_chunk(args) -> list:
    config, replicates, ts = args
    return [_run_replicate(config, r, ts) for r in replicates]


def _collect_betas(
    config: ModelConfig,
    replicates: int,
    ts: Sequence[int],
    parallelism: int = 1,
) -> np.ndarray:
    """(replicates, len(ts)) array of beta draws, keyed by replicate index."""
    if replicates < 2:
        raise ConfigurationError("need at least 2 replicates")
    out = np.empty((replicates, len(ts)))
    if parallelism <= 1:
        for r in range(replicates):
            out[r] = _run_replicate(config, r, ts)
        return out
    chunks = [
        (config, list(range(start, replicates, parallelism)), ts)
        for start in range(parallelism)
    ]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        for chunk, rows in zip(chunks, pool.map(_replicate_chunk, chunks)):
            for r, row in zip(chunk[1], rows):
                out[r] = row
    return out


def _estimates_from(betas: np.ndarray, ts: Sequence[int]) -> List[BiasEstimate]:
    replicates = betas.shape[0]
    means = betas.mean(axis=0)
    sds = betas.std(axis=0, ddof=1)
    cis = Z_95 * sds / math.sqrt(replicates)
    return [
        BiasEstimate(t=t, mean_beta=float(m), ci_halfwidth=float(c), replicates=replicates)
        for t, m, c in zip(ts, means, cis)
    ]


def estimate_expected_bias(
    config: ModelConfig, replicates: int, parallelism: int = 1
) -> List[BiasEstimate]:
    """Per-round mean of beta across independent replicate trajectories."""
    ts = list(range(1, config.horizon + 1))
    if not ts:
        return []
    betas = _collect_betas(config, replicates, ts, parallelism=parallelism)
    return _estimates_from(betas, ts)


@dataclass(frozen=True)
class BoundComparisonRow:
    t: int
    mean_beta: float
    ci_halfwidth: float
    bound_lower: Optional[float]
    bound_upper: Optional[float]
    vacuous: bool
    n0_ok: Optional[bool]
    satisfied: bool


@dataclass
class BoundComparison:
    config: ModelConfig
    rows: List[BoundComparisonRow] = field(default_factory=list)

    @property
    def all_satisfied(self) -> bool:
        return all(r.satisfied for r in self.rows)

    def violations(self) -> list:
        """Rows where a binding (non-vacuous, n0-cleared) bound fails."""
        out = []
        for r in self.rows:
            if r.vacuous:
                continue
            if r.n0_ok is False:
                continue
            if not r.satisfied:
                out.append(r)
        return out


def compare_bounds(
    config: ModelConfig, replicates: int, parallelism: int = 1
) -> BoundComparison:
    """Join per-t Monte Carlo estimates with the applicable theorem bound."""
    estimates = estimate_expected_bias(config, replicates, parallelism=parallelism)
    curve = evaluate_bound_curve(config, [e.t for e in estimates])
    comparison = BoundComparison(config=config)
    for est, entry in zip(estimates, curve.entries):
        if config.ell >= 1:
            satisfied = est.mean_beta + est.ci_halfwidth >= entry.lower
        else:
            satisfied = entry.vacuous or (
                est.mean_beta - est.ci_halfwidth <= entry.upper
            )
        comparison.rows.append(BoundComparisonRow(
            t=est.t,
            mean_beta=est.mean_beta,
            ci_halfwidth=est.ci_halfwidth,
            bound_lower=entry.lower,
            bound_upper=entry.upper,
            vacuous=entry.vacuous,
            n0_ok=entry.n0_ok,
            satisfied=satisfied,
        ))
    return comparison


@dataclass
class SweepResult:
    axis: str
    points: List[tuple] = field(default_factory=list)  # (value, [BiasEstimate])


def sweep(
    base: ModelConfig,
    axis: str,
    values: Sequence,
    replicates: int,
    parallelism: int = 1,
) -> SweepResult:
    """One estimate series per axis value; all series share the seed scheme."""
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")
    result = SweepResult(axis=axis)
    for value in values:
        try:
            config = base.with_overrides(**{axis: value})
        except (ConfigurationError, TypeError) as exc:
            raise ConfigurationError(f"invalid {axis} value {value!r}: {exc}") from exc
        result.points.append(
            (value, estimate_expected_bias(config, replicates, parallelism=parallelism))
        )
    return result


@dataclass
class ProbeResult:
    checkpoints: List[BiasEstimate] = field(default_factory=list)
    increasing_fraction: float = 0.0


def long_horizon_probe(
    config: ModelConfig,
    replicates: int,
    checkpoints: Sequence[int],
    parallelism: int = 1,
) -> ProbeResult:
    """Memory-lean estimates at the given rounds only (ell = 0 regime)."""
    if config.ell != 0:
        raise ConstraintError("long-horizon probe applies only when ell = 0")
    checkpoints = list(checkpoints)
    if not checkpoints or checkpoints != sorted(checkpoints):
        raise ConfigurationError("checkpoints must be a non-empty ascending list")
    if checkpoints[0] < 1:
        raise ConfigurationError("checkpoints are 1-based round indices")
    betas = _collect_betas(config, replicates, checkpoints, parallelism=parallelism)
    estimates = _estimates_from(betas, checkpoints)
    means = [e.mean_beta for e in estimates]
    pairs = list(zip(means, means[1:]))
    increasing = sum(1 for m1, m2 in pairs if m2 > m1)
    fraction = increasing / len(pairs) if pairs else 1.0
    return ProbeResult(checkpoints=estimates, increasing_fraction=fraction)
