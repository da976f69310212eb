"""Domain types, probability distributions, constrained shortlist selection,
and belief-update rules.

Everything here is a pure function of its inputs plus an explicit RNG, so
values can move freely between threads.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

__all__ = [
    "ConfigurationError",
    "DomainError",
    "ConstraintError",
    "DegenerateRoundError",
    "RuleError",
    "UtilityDistribution",
    "BeliefState",
    "BiasDistributionSpec",
    "UpdateRuleSpec",
    "RoundSample",
    "Shortlist",
    "ModelConfig",
    "A_CAP",
    "sample_latent",
    "sample_bias",
    "apply_bias",
    "total_utility",
    "select_shortlist",
    "brute_force_shortlist",
    "compute_delta",
    "update_belief",
    "phi",
    "inverse_moment",
    "median_bound",
    "beta_family",
    "truncated_normal_bias",
]


class ConfigurationError(ValueError):
    """Invalid distribution/model parameters."""


class DomainError(ValueError):
    """An argument is outside its mathematical domain."""


class ConstraintError(ValueError):
    """A selection request is infeasible (or refused by a guard)."""


class DegenerateRoundError(ArithmeticError):
    """A round produced a zero observed utility; the update is undefined."""


class RuleError(ValueError):
    """An update rule violates its admissibility assumptions."""


# Cap on the evidence parameter; expected bias at the cap is numerically 1,
# so dynamics past it are unaffected.
A_CAP = 1e12

# Enumeration guard for the brute-force selection oracle.
BRUTE_FORCE_MAX_N = 20


def _quantize(values: np.ndarray) -> np.ndarray:
    # Round draws to 24-bit significands: rescaling them by moderate factors
    # (e.g. x100) is then exact in float64, which the scale-invariance
    # guarantee of the dynamics relies on.
    return np.float32(values).astype(np.float64)


# ---------------------------------------------------------------------------
# Latent-utility distributions


@dataclass(frozen=True)
class UtilityDistribution:
    """Continuous latent-utility distribution with bounded support [lo, hi].

    Kinds: ``uniform``, ``truncated-normal`` (location/scale before
    truncation), ``truncated-powerlaw`` (density proportional to
    x**exponent on [lo, hi]).
    """

    kind: str
    lo: float
    hi: float
    location: Optional[float] = None
    scale: Optional[float] = None
    exponent: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("uniform", "truncated-normal", "truncated-powerlaw"):
            raise ConfigurationError(f"unknown utility distribution kind {self.kind!r}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ConfigurationError("support bounds must be finite")
        if self.lo < 0:
            raise ConfigurationError("support must be non-negative (lo >= 0)")
        if not self.hi > self.lo:
            raise ConfigurationError("support must be non-degenerate (hi > lo)")
        if self.kind == "truncated-normal":
            if self.location is None or self.scale is None:
                raise ConfigurationError("truncated-normal needs location and scale")
            if self.scale <= 0:
                raise ConfigurationError("truncated-normal scale must be positive")
        if self.kind == "truncated-powerlaw":
            if self.exponent is None:
                raise ConfigurationError("truncated-powerlaw needs an exponent")
            if self.exponent < 0 and self.lo <= 0:
                raise ConfigurationError(
                    "truncated-powerlaw with negative exponent needs lo > 0"
                )

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "UtilityDistribution":
        return cls(kind="uniform", lo=lo, hi=hi)

    @classmethod
    def truncated_normal(
        cls, location: float, scale: float, lo: float, hi: float
    ) -> "UtilityDistribution":
        return cls(kind="truncated-normal", lo=lo, hi=hi, location=location, scale=scale)

    @classmethod
    def truncated_powerlaw(cls, exponent: float, lo: float, hi: float) -> "UtilityDistribution":
        return cls(kind="truncated-powerlaw", lo=lo, hi=hi, exponent=exponent)

    def pdf_unnormalized(self, x: np.ndarray) -> np.ndarray:
        """Density shape on [lo, hi] (not normalized); zero outside."""
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= self.lo) & (x <= self.hi)
        if self.kind == "uniform":
            out = np.ones_like(x)
        elif self.kind == "truncated-normal":
            z = (x - self.location) / self.scale
            out = np.exp(-0.5 * z * z)
        else:
            out = np.power(np.where(inside, x, 1.0), self.exponent)
        return np.where(inside, out, 0.0)

    def _inverse_cdf(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "uniform":
            return self.lo + u * (self.hi - self.lo)
        if self.kind == "truncated-normal":
            p_lo = special.ndtr((self.lo - self.location) / self.scale)
            p_hi = special.ndtr((self.hi - self.location) / self.scale)
            return self.location + self.scale * special.ndtri(p_lo + u * (p_hi - p_lo))
        g = self.exponent
        if g == -1.0:
            log_lo, log_hi = math.log(self.lo), math.log(self.hi)
            return np.exp(log_lo + u * (log_hi - log_lo))
        a = self.lo ** (g + 1.0)
        b = self.hi ** (g + 1.0)
        return np.power(a + u * (b - a), 1.0 / (g + 1.0))


def sample_latent(
    dist: UtilityDistribution, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``count`` i.i.d. latent utilities from ``dist``."""
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    values = _quantize(dist._inverse_cdf(rng.random(count)))
    return np.clip(values, dist.lo, dist.hi)


# ---------------------------------------------------------------------------
# Belief state and bias distributions


@dataclass(frozen=True)
class BeliefState:
    """Evidence parameters (a, b) of the panel's bias belief; b is fixed."""

    a: float
    b: float
    capped: bool = False

    def __post_init__(self):
        if not (self.a > 1.0 and self.b > 1.0):
            raise DomainError("belief parameters require a > 1 and b > 1")


@dataclass(frozen=True)
class BiasDistributionSpec:
    """Family of bias distributions D(a) on [0, 1] parameterized by a.

    The built-in ``beta`` family draws Beta(a, b). A ``custom`` family
    supplies its own evaluator handles; any handle left as None falls back
    to numerical evaluation where one exists.
    """

    family: str = "beta"
    sampler: Optional[Callable[[float, float, np.random.Generator], float]] = None
    phi_fn: Optional[Callable[[float, float], float]] = None
    median_fn: Optional[Callable[[float, float], float]] = None
    inverse_moment_fn: Optional[Callable[[float, float], float]] = None

    def __post_init__(self):
        if self.family not in ("beta", "custom"):
            raise ConfigurationError(f"unknown bias family {self.family!r}")
        if self.family == "custom" and self.sampler is None:
            raise ConfigurationError("custom bias family needs a sampler handle")

    def mean(self, a: float, b: float) -> float:
        if self.family == "beta" or self.phi_fn is None:
            return a / (a + b)
        return self.phi_fn(a, b)

    def median(self, a: float, b: float) -> float:
        if self.family == "beta" or self.median_fn is None:
            return float(special.betaincinv(a, b, 0.5))
        return self.median_fn(a, b)

    def inverse_moment(self, a: float, b: float) -> float:
        if self.family == "beta" or self.inverse_moment_fn is None:
            return (a + b - 1.0) / (a - 1.0)
        return self.inverse_moment_fn(a, b)


def beta_family() -> BiasDistributionSpec:
    return BiasDistributionSpec(family="beta")


def truncated_normal_bias(scale: float = 0.2) -> BiasDistributionSpec:
    """Normal bias belief with location a/(a+b), truncated to [0, 1]."""
    if scale <= 0:
        raise ConfigurationError("scale must be positive")

    def _bounds(a: float, b: float):
        loc = a / (a + b)
        p0 = special.ndtr((0.0 - loc) / scale)
        p1 = special.ndtr((1.0 - loc) / scale)
        return loc, p0, p1

    def sampler(a: float, b: float, rng: np.random.Generator) -> float:
        loc, p0, p1 = _bounds(a, b)
        u = rng.random()
        return float(loc + scale * special.ndtri(p0 + u * (p1 - p0)))

    def phi_fn(a: float, b: float) -> float:
        loc, p0, p1 = _bounds(a, b)
        z0 = (0.0 - loc) / scale
        z1 = (1.0 - loc) / scale
        dens = math.exp(-0.5 * z0 * z0) - math.exp(-0.5 * z1 * z1)
        return loc + scale * dens / (math.sqrt(2 * math.pi) * (p1 - p0))

    def median_fn(a: float, b: float) -> float:
        loc, p0, p1 = _bounds(a, b)
        return float(loc + scale * special.ndtri(0.5 * (p0 + p1)))

    def inverse_moment_fn(a: float, b: float) -> float:
        # Density is positive at 0, so E[1/beta] diverges; report inf and
        # let the assumption checker flag it.
        return math.inf

    return BiasDistributionSpec(
        family="custom",
        sampler=sampler,
        phi_fn=phi_fn,
        median_fn=median_fn,
        inverse_moment_fn=inverse_moment_fn,
    )


def sample_bias(
    state: BeliefState, spec: BiasDistributionSpec, rng: np.random.Generator
) -> float:
    """One draw of the bias factor from the belief's distribution family.

    The beta family draws as a ratio of two gamma variates, which is exact
    for non-integer shapes and deterministic given the generator state.
    """
    if spec.family == "beta":
        g1 = rng.standard_gamma(state.a)
        g2 = rng.standard_gamma(state.b)
        total = g1 + g2
        if total == 0.0:
            return 0.5
        return float(g1 / total)
    value = float(spec.sampler(state.a, state.b, rng))
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"custom bias sampler returned {value} outside [0, 1]")
    return value


def phi(state: BeliefState) -> float:
    """Expected bias a/(a+b); increasing and concave in a."""
    return state.a / (state.a + state.b)


def inverse_moment(state: BeliefState) -> float:
    """E[1/beta] = (a+b-1)/(a-1) for the beta belief; decreasing in a."""
    if state.a <= 1.0:
        raise DomainError("inverse moment diverges for a <= 1")
    return (state.a + state.b - 1.0) / (state.a - 1.0)


def median_bound(state: BeliefState) -> float:
    """Payton upper bound on the median of Beta(a, b)."""
    a, b = state.a, state.b
    if a == b:
        return 0.5
    if b < a:
        return (a - 1.0) / (a + b - 2.0)
    return a / (a + b)


# ---------------------------------------------------------------------------
# Observed utilities and shortlist selection


def apply_bias(x_latent: np.ndarray, beta: float) -> np.ndarray:
    """Scale latent utilities of the underrepresented group by beta."""
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")
    x_latent = np.asarray(x_latent, dtype=np.float64)
    if np.any(x_latent < 0):
        raise DomainError("latent utilities must be non-negative")
    return beta * x_latent


@dataclass(frozen=True)
class RoundSample:
    """Latent draws and the biased observation of one round."""

    x_latent: np.ndarray
    y_latent: np.ndarray
    beta: float
    x_observed: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.x_observed is None:
            object.__setattr__(self, "x_observed", apply_bias(self.x_latent, self.beta))


GROUP_X = "X"
GROUP_Y = "Y"


@dataclass(frozen=True)
class Shortlist:
    """A selected set of candidate references (group, index), |members| = k."""

    members: frozenset

    @property
    def k(self) -> int:
        return len(self.members)

    @property
    def x_indices(self) -> tuple:
        return tuple(sorted(i for g, i in self.members if g == GROUP_X))

    @property
    def y_indices(self) -> tuple:
        return tuple(sorted(i for g, i in self.members if g == GROUP_Y))

    @property
    def num_x(self) -> int:
        return sum(1 for g, _ in self.members if g == GROUP_X)

    def sorted_members(self) -> list:
        return sorted(self.members, key=lambda m: (m[0] != GROUP_X, m[1]))

    @classmethod
    def of(cls, members) -> "Shortlist":
        return cls(members=frozenset(members))


def total_utility(shortlist: Shortlist, x_values, y_values) -> float:
    """Sum of the referenced values; latent vectors give U, observed give U~."""
    x_values = np.asarray(x_values, dtype=np.float64)
    y_values = np.asarray(y_values, dtype=np.float64)
    terms = []
    for group, idx in shortlist.members:
        values = x_values if group == GROUP_X else y_values
        if not 0 <= idx < len(values):
            raise IndexError(f"shortlist reference ({group}, {idx}) out of range")
        terms.append(float(values[idx]))
    return math.fsum(terms)


def _candidate_order(x_observed: np.ndarray, y_observed: np.ndarray) -> list:
    """All candidates sorted by observed desc, group X before Y, index asc."""
    n_x, n_y = len(x_observed), len(y_observed)
    obs = np.concatenate([np.asarray(x_observed, dtype=np.float64),
                          np.asarray(y_observed, dtype=np.float64)])
    group = np.concatenate([np.zeros(n_x, dtype=np.int64), np.ones(n_y, dtype=np.int64)])
    index = np.concatenate([np.arange(n_x), np.arange(n_y)])
    # lexsort: last key is primary
    order = np.lexsort((index, group, -obs))
    return [(GROUP_X if group[i] == 0 else GROUP_Y, int(index[i])) for i in order]


def _validate_selection_args(n_x: int, n_y: int, k: int, ell: int) -> None:
    n = n_x + n_y
    if not 0 <= ell <= k <= n:
        raise ConstraintError(f"need 0 <= ell <= k <= n, got ell={ell}, k={k}, n={n}")
    if ell > n_x:
        raise ConstraintError(f"ell={ell} exceeds the {n_x} available X-candidates")


def select_shortlist(x_observed, y_observed, k: int, ell: int) -> Shortlist:
    """Max-observed-utility size-k set containing at least ell X-candidates.

    Constructive: take the ell highest-observed X-candidates, then fill the
    remaining slots with the highest-observed candidates overall. Ties break
    by group X before Y, then ascending index. Equals exhaustive enumeration
    under the same tie-break.
    """
    x_observed = np.asarray(x_observed, dtype=np.float64)
    y_observed = np.asarray(y_observed, dtype=np.float64)
    _validate_selection_args(len(x_observed), len(y_observed), k, ell)
    order = _candidate_order(x_observed, y_observed)
    forced = [c for c in order if c[0] == GROUP_X][:ell]
    taken = set(forced)
    for cand in order:
        if len(taken) == k:
            break
        if cand not in taken:
            taken.add(cand)
    return Shortlist.of(taken)


def brute_force_shortlist(x_observed, y_observed, k: int, ell: int) -> Shortlist:
    """Exhaustive-enumeration oracle for select_shortlist (n <= 20 only)."""
    x_observed = np.asarray(x_observed, dtype=np.float64)
    y_observed = np.asarray(y_observed, dtype=np.float64)
    n_x, n_y = len(x_observed), len(y_observed)
    n = n_x + n_y
    if n > BRUTE_FORCE_MAX_N:
        raise ConstraintError(f"brute force refused for n={n} > {BRUTE_FORCE_MAX_N}")
    _validate_selection_args(n_x, n_y, k, ell)

    candidates = [(GROUP_X, i) for i in range(n_x)] + [(GROUP_Y, j) for j in range(n_y)]

    def value(cand):
        g, i = cand
        return float(x_observed[i]) if g == GROUP_X else float(y_observed[i])

    def tie_key(subset):
        # Roster of per-candidate sort keys; smaller roster wins exact ties.
        return tuple(sorted((-value(c), c[0] != GROUP_X, c[1]) for c in subset))

    best = None
    best_util = -math.inf
    best_key = None
    for subset in itertools.combinations(candidates, k):
        if sum(1 for g, _ in subset if g == GROUP_X) < ell:
            continue
        util = math.fsum(value(c) for c in subset)
        if util > best_util:
            best, best_util, best_key = subset, util, None
        elif util == best_util:
            if best_key is None:
                best_key = tie_key(best)
            key = tie_key(subset)
            if key < best_key:
                best, best_key = subset, key
    if best is None:
        raise ConstraintError("no feasible subset")
    return Shortlist.of(best)


# ---------------------------------------------------------------------------
# Belief updates


def compute_delta(beta: float, u_x: float, u_y: float) -> float:
    """Relative surprise (1-beta)*U_X / (beta*U_X + U_Y) of a round.

    Evaluated through the ratio U_Y/U_X so that rescaling all utilities by a
    common factor cancels exactly.
    """
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")
    if u_x < 0 or u_y < 0:
        raise DomainError("group utilities must be non-negative")
    if u_x == 0.0:
        if u_y == 0.0:
            raise DegenerateRoundError("observed utility is zero (U_X = U_Y = 0)")
        return 0.0
    if beta == 0.0 and u_y == 0.0:
        raise DegenerateRoundError("observed utility is zero (beta = 0, U_Y = 0)")
    return (1.0 - beta) / (beta + u_y / u_x)


@dataclass(frozen=True)
class UpdateRuleSpec:
    """Belief update a' = a * F(U/U~) for an admissible F.

    Kinds: ``ratio`` (F = identity), ``affine`` (F(x) = 1 + c*(x-1), c > 0),
    ``power`` (F(x) = x**gamma, gamma in (0, 1]).
    """

    kind: str = "ratio"
    c: Optional[float] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("ratio", "affine", "power"):
            raise RuleError(f"unknown update rule kind {self.kind!r}")
        if self.kind == "affine" and (self.c is None or self.c <= 0):
            raise RuleError("affine rule needs c > 0")
        if self.kind == "power" and (
            self.gamma is None or not 0.0 < self.gamma <= 1.0
        ):
            raise RuleError("power rule needs gamma in (0, 1]")

    @classmethod
    def ratio(cls) -> "UpdateRuleSpec":
        return cls(kind="ratio")

    @classmethod
    def affine(cls, c: float) -> "UpdateRuleSpec":
        return cls(kind="affine", c=c)

    @classmethod
    def power(cls, gamma: float) -> "UpdateRuleSpec":
        return cls(kind="power", gamma=gamma)

    def f(self, x: float) -> float:
        if x < 1.0:
            raise RuleError(f"update rule evaluated below 1 (x={x})")
        if self.kind == "ratio":
            return x
        if self.kind == "affine":
            return 1.0 + self.c * (x - 1.0)
        return x ** self.gamma

    def label(self) -> str:
        if self.kind == "affine":
            return f"affine(c={self.c:g})"
        if self.kind == "power":
            return f"power(gamma={self.gamma:g})"
        return "ratio"


def _apply_update(state: BeliefState, ratio: float, rule: UpdateRuleSpec) -> BeliefState:
    factor = rule.f(ratio)
    if factor < 1.0:
        raise RuleError(f"update factor F({ratio}) = {factor} < 1")
    a_next = state.a * factor
    capped = state.capped
    if a_next > A_CAP:
        a_next = A_CAP
        capped = True
    return BeliefState(a=a_next, b=state.b, capped=capped)


def update_belief(
    state: BeliefState,
    u_latent: float,
    u_observed: float,
    rule: UpdateRuleSpec = UpdateRuleSpec.ratio(),
) -> BeliefState:
    """Apply a' = a * F(U/U~); b is unchanged, a never decreases."""
    if u_observed <= 0.0:
        raise DegenerateRoundError("observed utility must be positive for an update")
    if u_latent < u_observed:
        raise DomainError("latent utility cannot be below observed utility")
    return _apply_update(state, u_latent / u_observed, rule)


def check_rule_admissible(
    rule: UpdateRuleSpec, grid: Sequence[float] = tuple(np.linspace(1.0, 10.0, 46))
) -> None:
    """Verify F(1)=1, strict increase, and midpoint concavity on a grid."""
    if abs(rule.f(1.0) - 1.0) > 1e-12:
        raise RuleError("F(1) must equal 1")
    values = [rule.f(x) for x in grid]
    for (x1, f1), (x2, f2) in zip(zip(grid, values), zip(grid[1:], values[1:])):
        if not f2 > f1:
            raise RuleError(f"F not strictly increasing between {x1} and {x2}")
    for (x1, f1), (x2, f2) in itertools.combinations(zip(grid, values), 2):
        mid = rule.f((x1 + x2) / 2.0)
        if mid < (f1 + f2) / 2.0 - 1e-12:
            raise RuleError(f"F not midpoint-concave at ({x1}, {x2})")


# ---------------------------------------------------------------------------
# Model configuration


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ModelConfig:
    """All dynamics parameters; a trajectory is a pure function of this."""

    n: int
    k: int
    ell: int
    rho: float
    a1: float
    b: float
    utility_dist: UtilityDistribution = field(
        default_factory=lambda: UtilityDistribution.uniform(0.0, 1.0)
    )
    bias_dist: BiasDistributionSpec = field(default_factory=beta_family)
    update_rule: UpdateRuleSpec = field(default_factory=UpdateRuleSpec.ratio)
    horizon: int = 25
    seed: int = 0
    beta_override: Optional[float] = None  # test hook: forces beta each round

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError("need at least two candidates")
        if not 0.0 < self.rho < 1.0:
            raise ConfigurationError("rho must lie in (0, 1)")
        n_x = _round_half_up(self.rho * self.n)
        n_y = self.n - n_x
        if n_x < 1 or n_y < 1:
            raise ConfigurationError(
                f"rho={self.rho} with n={self.n} leaves an empty group"
            )
        if not 0 <= self.ell <= self.k <= self.n:
            raise ConfigurationError(
                f"need 0 <= ell <= k <= n, got ell={self.ell}, k={self.k}, n={self.n}"
            )
        if self.ell > n_x:
            raise ConfigurationError(f"ell={self.ell} exceeds n_X={n_x}")
        if not self.a1 > 1.0:
            raise ConfigurationError("a1 must exceed 1")
        if not self.b > 1.0:
            raise ConfigurationError("b must exceed 1")
        if self.horizon < 0:
            raise ConfigurationError("horizon must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit non-negative integer")
        if self.beta_override is not None and not 0.0 <= self.beta_override <= 1.0:
            raise ConfigurationError("beta_override must lie in [0, 1]")

    @property
    def n_x(self) -> int:
        return _round_half_up(self.rho * self.n)

    @property
    def n_y(self) -> int:
        return self.n - self.n_x

    def initial_state(self) -> BeliefState:
        return BeliefState(a=self.a1, b=self.b)

    def with_overrides(self, **kwargs) -> "ModelConfig":
        return replace(self, **kwargs)
