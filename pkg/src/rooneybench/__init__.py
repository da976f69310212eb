"""Workbench for Rooney-constrained selection dynamics.

Simulates iterated candidate selection under a multiplicative implicit-bias
model with beta-belief updates, numerically verifies the fast/slow learning
bounds by Monte Carlo, and runs a round-based selection experiment service
with analysis tooling.
"""

__version__ = "0.1.0"

from .core import (
    BeliefState,
    BiasDistributionSpec,
    ModelConfig,
    Shortlist,
    UpdateRuleSpec,
    UtilityDistribution,
    apply_bias,
    beta_family,
    brute_force_shortlist,
    compute_delta,
    inverse_moment,
    median_bound,
    phi,
    sample_bias,
    sample_latent,
    select_shortlist,
    total_utility,
    update_belief,
)
from .dynamics import RoundRecord, Trajectory, run_round, run_trajectory

__all__ = [
    "__version__",
    "BeliefState",
    "BiasDistributionSpec",
    "ModelConfig",
    "Shortlist",
    "UpdateRuleSpec",
    "UtilityDistribution",
    "apply_bias",
    "beta_family",
    "brute_force_shortlist",
    "compute_delta",
    "inverse_moment",
    "median_bound",
    "phi",
    "sample_bias",
    "sample_latent",
    "select_shortlist",
    "total_utility",
    "update_belief",
    "RoundRecord",
    "Trajectory",
    "run_round",
    "run_trajectory",
]
