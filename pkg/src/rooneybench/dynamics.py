"""The iterated selection loop: one round, and full trajectories.

Round t draws fresh latent utilities, draws the bias factor from the current
belief, selects the constrained shortlist on observed utilities, and grows
the belief's evidence parameter by the latent/observed utility ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, List

import numpy as np

from . import rng as rngmod
from .core import (
    A_CAP,
    BeliefState,
    DegenerateRoundError,
    ModelConfig,
    RoundSample,
    Shortlist,
    _apply_update,
    compute_delta,
    sample_bias,
    sample_latent,
    select_shortlist,
    total_utility,
)

__all__ = ["RoundRecord", "Trajectory", "run_round", "run_trajectory", "iter_rounds"]


@dataclass(frozen=True)
class RoundRecord:
    """Everything observable about one iteration (t is 1-based in reports)."""

    t: int
    beta: float
    shortlist: Shortlist
    u_latent: float
    u_observed: float
    u_x: float
    u_y: float
    delta: float
    a_before: float
    a_after: float

    @property
    def num_x_selected(self) -> int:
        return self.shortlist.num_x


@dataclass
class Trajectory:
    config: ModelConfig
    rounds: List[RoundRecord] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def final_state(self) -> BeliefState:
        if not self.rounds:
            return self.config.initial_state()
        last = self.rounds[-1]
        return BeliefState(a=last.a_after, b=self.config.b, capped="a-cap" in self.warnings)

    def betas(self) -> np.ndarray:
        return np.array([r.beta for r in self.rounds])


def run_round(
    state: BeliefState,
    config: ModelConfig,
    rng: np.random.Generator,
    t: int = 1,
) -> RoundRecord:
    """Execute one iteration in model order: sample, bias, select, update."""
    x_latent = sample_latent(config.utility_dist, config.n_x, rng)
    y_latent = sample_latent(config.utility_dist, config.n_y, rng)
    if config.beta_override is not None:
        beta = config.beta_override
    else:
        beta = sample_bias(state, config.bias_dist, rng)
    sample = RoundSample(x_latent=x_latent, y_latent=y_latent, beta=beta)
    x_observed = sample.x_observed

    shortlist = select_shortlist(x_observed, y_latent, config.k, config.ell)
    u_latent = total_utility(shortlist, x_latent, y_latent)
    u_observed = total_utility(shortlist, x_observed, y_latent)
    u_x = math.fsum(float(x_latent[i]) for i in shortlist.x_indices)
    u_y = math.fsum(float(y_latent[j]) for j in shortlist.y_indices)

    delta = compute_delta(beta, u_x, u_y)
    new_state = _apply_update(state, 1.0 + delta, config.update_rule)
    return RoundRecord(
        t=t,
        beta=beta,
        shortlist=shortlist,
        u_latent=u_latent,
        u_observed=u_observed,
        u_x=u_x,
        u_y=u_y,
        delta=delta,
        a_before=state.a,
        a_after=new_state.a,
    )


def iter_rounds(config: ModelConfig, replicate: int = 0) -> Iterator[RoundRecord]:
    """Stream the rounds of one trajectory without retaining them."""
    state = config.initial_state()
    for t in range(1, config.horizon + 1):
        round_rng = rngmod.substream(config.seed, rngmod.LANE_TRAJECTORY, replicate, t)
        try:
            record = run_round(state, config, round_rng, t=t)
        except DegenerateRoundError as exc:
            raise DegenerateRoundError(f"round {t}: {exc}") from exc
        capped = state.capped or record.a_after >= A_CAP
        state = BeliefState(a=record.a_after, b=config.b, capped=capped)
        yield record


def run_trajectory(config: ModelConfig, replicate: int = 0) -> Trajectory:
    """All horizon rounds chained through the belief state."""
    trajectory = Trajectory(config=config)
    capped = False
    for record in iter_rounds(config, replicate=replicate):
        trajectory.rounds.append(record)
        capped = capped or record.a_after >= A_CAP
    if capped:
        trajectory.warnings.append("a-cap")
    return trajectory
