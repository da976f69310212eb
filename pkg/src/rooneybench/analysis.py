"""Experiment metrics and statistical tests for iterated-selection sessions.

Works identically on scripted-bot sessions and human sessions exported by
the session service.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np
from scipy import special

from .core import DomainError, Shortlist, select_shortlist

__all__ = [
    "SelectionMetrics",
    "TestResult",
    "OlsResult",
    "SessionRound",
    "ExperimentSession",
    "UndefinedTestError",
    "SingularDesignError",
    "optimal_strategy_set",
    "compute_selection_metrics",
    "welch_t_test",
    "ols_fit",
    "session_report",
    "student_t_sf",
]


class UndefinedTestError(ValueError):
    """Both samples are constant; the test statistic is undefined."""


class SingularDesignError(ValueError):
    """The regression design matrix is singular (constant regressor)."""


# ---------------------------------------------------------------------------
# t distribution via the regularized incomplete beta function


def student_t_sf(t: float, df: float) -> float:
    """One-sided survival P(T > t) for Student's t with df degrees of freedom."""
    if df <= 0:
        raise DomainError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = df / (df + t * t)
    half_tail = 0.5 * float(special.betainc(df / 2.0, 0.5, x))
    return half_tail if t > 0 else 1.0 - half_tail


def _two_sided_p(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


@dataclass(frozen=True)
class TestResult:
    statistic: float
    degrees_of_freedom: float
    p_value: float
    means: tuple
    sds: tuple
    sizes: tuple


def welch_t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> TestResult:
    """Welch's unequal-variance t-test with Welch-Satterthwaite df."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise UndefinedTestError("each sample needs at least 2 observations")
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    if va == 0.0 and vb == 0.0:
        raise UndefinedTestError("both samples have zero variance")
    sea = va / len(a)
    seb = vb / len(b)
    se2 = sea + seb
    stat = (float(a.mean()) - float(b.mean())) / math.sqrt(se2)
    df = se2 * se2 / (sea * sea / (len(a) - 1) + seb * seb / (len(b) - 1))
    return TestResult(
        statistic=stat,
        degrees_of_freedom=df,
        p_value=_two_sided_p(stat, df),
        means=(float(a.mean()), float(b.mean())),
        sds=(math.sqrt(va), math.sqrt(vb)),
        sizes=(len(a), len(b)),
    )


@dataclass(frozen=True)
class OlsResult:
    slope: float
    intercept: float
    slope_se: float
    intercept_se: float
    slope_t: float
    intercept_t: float
    slope_p: float
    intercept_p: float
    residual_ss: float
    n: int


def ols_fit(x: Sequence[float], y: Sequence[float]) -> OlsResult:
    """Ordinary least squares y = intercept + slope*x with classical SEs."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    if n < 3 or len(y) != n:
        raise SingularDesignError("need matched samples of length >= 3")
    x_mean = math.fsum(x) / n
    y_mean = math.fsum(y) / n
    sxx = math.fsum((xi - x_mean) ** 2 for xi in x)
    if sxx == 0.0:
        raise SingularDesignError("regressor is constant")
    sxy = math.fsum((xi - x_mean) * (yi - y_mean) for xi, yi in zip(x, y))
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    residuals = y - (intercept + slope * x)
    rss = math.fsum(float(r) * float(r) for r in residuals)
    df = n - 2
    s2 = rss / df
    slope_se = math.sqrt(s2 / sxx)
    intercept_se = math.sqrt(s2 * (1.0 / n + x_mean * x_mean / sxx))
    slope_t = slope / slope_se if slope_se > 0 else math.inf * np.sign(slope or 1.0)
    intercept_t = (
        intercept / intercept_se if intercept_se > 0
        else (math.inf * np.sign(intercept) if intercept != 0 else 0.0)
    )
    return OlsResult(
        slope=slope,
        intercept=intercept,
        slope_se=slope_se,
        intercept_se=intercept_se,
        slope_t=float(slope_t),
        intercept_t=float(intercept_t),
        slope_p=_two_sided_p(float(slope_t), df) if slope_se > 0 else 0.0,
        intercept_p=(
            _two_sided_p(float(intercept_t), df) if intercept_se > 0
            else (0.0 if intercept != 0 else 1.0)
        ),
        residual_ss=rss,
        n=n,
    )


# ---------------------------------------------------------------------------
# Optimal-strategy benchmark and per-round selection metrics


def optimal_strategy_set(
    x_observed: Sequence[float],
    y_observed: Sequence[float],
    beta_true: float,
    k: int,
) -> Shortlist:
    """Top-k candidates after debiasing X observations by the true beta."""
    if not 0.0 < beta_true <= 1.0:
        raise DomainError("beta_true must lie in (0, 1]")
    debiased = np.asarray(x_observed, dtype=np.float64) / beta_true
    return select_shortlist(debiased, y_observed, k, 0)


@dataclass(frozen=True)
class SelectionMetrics:
    """How one selection compares to the round's optimal strategy set."""

    num_blue_selected: int
    num_blue_over_required: int
    latent_fraction_total: float
    latent_fraction_blue: float
    latent_fraction_red: float
    overlap_total: float
    overlap_blue: float
    overlap_red: float

    FIELDS = (
        "num_blue_selected",
        "num_blue_over_required",
        "latent_fraction_total",
        "latent_fraction_blue",
        "latent_fraction_red",
        "overlap_total",
        "overlap_blue",
        "overlap_red",
    )

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}


@dataclass(frozen=True)
class SessionRound:
    """One round's full data: blue = X (biased group), red = Y."""

    index: int
    blue_latent: np.ndarray
    blue_observed: np.ndarray
    red_latent: np.ndarray
    red_observed: np.ndarray
    selection: Shortlist
    beta_true: float


def compute_selection_metrics(
    selection: Shortlist, round_data: SessionRound, ell: int, k: int
) -> SelectionMetrics:
    """Latent-utility fractions and optimal-set overlaps for one selection.

    Fractions are against the optimal strategy utility of the same round and
    are deliberately not clamped at 1: observation noise can make a
    non-optimal set exceed the optimal set's latent utility.
    """
    if selection.k != k:
        raise DomainError(f"selection has {selection.k} members, expected {k}")
    optimal = optimal_strategy_set(
        round_data.blue_observed, round_data.red_observed, round_data.beta_true, k
    )
    opt_utility = math.fsum(
        float(round_data.blue_latent[i]) for i in optimal.x_indices
    ) + math.fsum(float(round_data.red_latent[j]) for j in optimal.y_indices)
    if opt_utility == 0.0:
        raise DomainError("optimal strategy utility is zero")

    blue_latent = math.fsum(float(round_data.blue_latent[i]) for i in selection.x_indices)
    red_latent = math.fsum(float(round_data.red_latent[j]) for j in selection.y_indices)

    blue_members = {m for m in selection.members if m[0] == "X"}
    red_members = selection.members - blue_members
    overlap_blue = len(blue_members & optimal.members)
    overlap_red = len(red_members & optimal.members)

    num_blue = len(blue_members)
    return SelectionMetrics(
        num_blue_selected=num_blue,
        num_blue_over_required=num_blue - ell,
        latent_fraction_total=(blue_latent + red_latent) / opt_utility,
        latent_fraction_blue=blue_latent / opt_utility,
        latent_fraction_red=red_latent / opt_utility,
        overlap_total=(overlap_blue + overlap_red) / k,
        overlap_blue=overlap_blue / k,
        overlap_red=overlap_red / k,
    )


# ---------------------------------------------------------------------------
# Session-level reporting


@dataclass(frozen=True)
class ExperimentSession:
    """A completed session: condition, per-round data, and selections."""

    session_id: str
    condition: str  # "rooney" | "control"
    ell: int
    k: int
    rounds: tuple

    @classmethod
    def from_summary(cls, summary: dict) -> "ExperimentSession":
        """Parse the session service's summary schema."""
        beta = summary["params"]["bias"]
        rounds = []
        for payload in summary["rounds"]:
            tiles = payload["tiles"]
            blue = [t for t in tiles if t["color"] == "blue"]
            red = [t for t in tiles if t["color"] == "red"]
            blue.sort(key=lambda t: t["id"])
            red.sort(key=lambda t: t["id"])
            blue_pos = {t["id"]: i for i, t in enumerate(blue)}
            red_pos = {t["id"]: j for j, t in enumerate(red)}
            members = []
            for tid in payload["selected_ids"]:
                if tid in blue_pos:
                    members.append(("X", blue_pos[tid]))
                else:
                    members.append(("Y", red_pos[tid]))
            rounds.append(SessionRound(
                index=payload["round_index"],
                blue_latent=np.array([t["latent"] for t in blue], dtype=np.float64),
                blue_observed=np.array([t["observed"] for t in blue], dtype=np.float64),
                red_latent=np.array([t["latent"] for t in red], dtype=np.float64),
                red_observed=np.array([t["observed"] for t in red], dtype=np.float64),
                selection=Shortlist.of(members),
                beta_true=beta,
            ))
        return cls(
            session_id=summary["session_id"],
            condition=summary["condition"],
            ell=summary["ell"],
            k=summary["k"],
            rounds=tuple(rounds),
        )


def _session_metrics(
    session: ExperimentSession, late_window: int
) -> List[SelectionMetrics]:
    total = len(session.rounds)
    start = max(0, total - late_window)
    return [
        compute_selection_metrics(r.selection, r, session.ell, session.k)
        for r in session.rounds[start:]
    ]


def _table(values: Dict[str, list]) -> dict:
    out = {}
    for name, series in values.items():
        arr = np.asarray(series, dtype=np.float64)
        out[name] = {
            "mean": float(arr.mean()) if len(arr) else math.nan,
            "sd": float(arr.std(ddof=1)) if len(arr) > 1 else math.nan,
            "n": len(arr),
        }
    return out


def session_report(sessions: Sequence[ExperimentSession], late_window: int = 15) -> dict:
    """Group-by-condition metric tables, Welch tests, and learning slopes.

    Emits both poolings of the late-window metrics: ``pooled`` treats every
    (session, round) pair as one observation; ``by_participant`` averages
    within a session first. Welch tests and the learning regressions use the
    pooled view. The mixed-effects analysis some studies add on top of the
    pooled tests is intentionally out of scope here.
    """
    groups: Dict[str, list] = {"rooney": [], "control": []}
    for session in sessions:
        if session.condition not in groups:
            raise DomainError(f"unknown condition {session.condition!r}")
        groups[session.condition].append(session)

    report: dict = {"late_window": late_window, "groups": {}}
    pooled_series: Dict[str, Dict[str, list]] = {}
    for condition, members in groups.items():
        pooled: Dict[str, list] = {name: [] for name in SelectionMetrics.FIELDS}
        per_participant: Dict[str, list] = {name: [] for name in SelectionMetrics.FIELDS}
        slope_points_x: list = []
        slope_points_y: list = []
        for session in members:
            metrics = _session_metrics(session, late_window)
            for name in SelectionMetrics.FIELDS:
                series = [getattr(m, name) for m in metrics]
                pooled[name].extend(series)
                if series:
                    per_participant[name].append(float(np.mean(series)))
            for r in session.rounds:
                m = compute_selection_metrics(r.selection, r, session.ell, session.k)
                slope_points_x.append(r.index)
                slope_points_y.append(m.latent_fraction_total)
        pooled_series[condition] = pooled
        group_report = {
            "sessions": len(members),
            "pooled": _table(pooled),
            "by_participant": _table(per_participant),
        }
        if len(slope_points_x) >= 3 and len(set(slope_points_x)) > 1:
            fit = ols_fit(slope_points_x, slope_points_y)
            group_report["latent_fraction_trend"] = {
                "slope": fit.slope,
                "intercept": fit.intercept,
                "slope_se": fit.slope_se,
                "slope_t": fit.slope_t,
                "slope_p": fit.slope_p,
            }
        report["groups"][condition] = group_report

    report["tests"] = {}
    for metric in ("num_blue_over_required", "latent_fraction_blue"):
        sample_r = pooled_series["rooney"][metric]
        sample_c = pooled_series["control"][metric]
        if len(sample_r) >= 2 and len(sample_c) >= 2:
            try:
                result = welch_t_test(sample_r, sample_c)
            except UndefinedTestError:
                continue
            report["tests"][metric] = {
                "statistic": result.statistic,
                "degrees_of_freedom": result.degrees_of_freedom,
                "p_value": result.p_value,
                "means": result.means,
                "sds": result.sds,
                "sizes": result.sizes,
            }
    return report
