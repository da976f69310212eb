"""Bound evaluator tests against hand-derived values and monotonicity grids."""
from __future__ import annotations

import math

import numpy as np
import pytest

from rooneybench import rng as rngmod
from rooneybench.bounds import (
    assumption_check_bias_family,
    evaluate_bound_curve,
    n0_check,
    tail_mass,
    thm1_lower,
    thm2_upper,
)
from rooneybench.core import (
    BiasDistributionSpec,
    ConstraintError,
    DomainError,
    ModelConfig,
    UtilityDistribution,
    beta_family,
    sample_latent,
)


def _config(**overrides):
    base = dict(n=100, k=5, ell=1, rho=0.5, a1=2.0, b=2.0, horizon=25, seed=0)
    base.update(overrides)
    return ModelConfig(**base)


# ---------------------------------------------------------------------------
# fast-learning lower bound


def test_thm1_hand_value():
    # a1=b=2, rho->1, k=ell=1, t=16: C=1/8, C1=1/32,
    # (1 - 0.5/1.5) * (1 - e^-1) = 0.42141370588570514
    expected = (1.0 - 0.5 / 1.5) * (1.0 - math.exp(-1.0))
    config_exact = _config(n=2, k=1, ell=1, rho=0.5, a1=2.0, b=2.0)
    # With rho=0.5 the same algebra at t=32 gives identical factors:
    # C1*t*rho/(k-ell+1) = (1/32)*32*0.5 = 0.5 and t*rho/16 = 1.
    value = thm1_lower(config_exact, 32)
    assert value == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.42141370588570514, rel=1e-12)


def test_thm1_zero_t_limit():
    assert thm1_lower(_config(), 0) == 0.0


def test_thm1_monotone_in_t():
    config = _config()
    values = [thm1_lower(config, t) for t in (1, 5, 20, 80)]
    assert values == sorted(values)


def test_thm1_monotone_grids():
    base = dict(n=100, rho=0.5, a1=2.0, b=2.0, horizon=25, seed=0)
    t = 20
    # increasing ell raises the bound
    by_ell = [thm1_lower(ModelConfig(k=8, ell=ell, **base), t) for ell in (1, 2, 4, 8)]
    assert by_ell == sorted(by_ell)
    # increasing k lowers the bound
    by_k = [thm1_lower(ModelConfig(k=k, ell=1, **base), t) for k in (2, 4, 8, 16)]
    assert by_k == sorted(by_k, reverse=True)
    # increasing rho raises the bound
    base_rho = dict(n=100, k=5, ell=1, a1=2.0, b=2.0, horizon=25, seed=0)
    by_rho = [thm1_lower(ModelConfig(rho=r, **base_rho), t) for r in (0.1, 0.25, 0.5, 0.8)]
    assert by_rho == sorted(by_rho)


def test_thm1_requires_constraint():
    with pytest.raises(ConstraintError):
        thm1_lower(_config(ell=0), 5)


def test_thm1_independent_of_n():
    values = {thm1_lower(_config(n=n), 10) for n in (50, 100, 1000, 10**6)}
    assert len(values) == 1


# ---------------------------------------------------------------------------
# slow-learning upper bound


def test_thm2_hand_value():
    # a1=2 (C2=64), t=10, n=1e6, rho=0.5: 0.5 + 640*ln(1e6)/5e5
    config = _config(ell=0, n=10**6, rho=0.5, a1=2.0, b=2.0, k=5)
    expected = 0.5 + 64.0 * 10 * math.log(10**6) / (10**6 * 0.5)
    value = thm2_upper(config, 10)
    assert value == pytest.approx(expected, rel=1e-14)
    assert value == pytest.approx(0.5176838535141943, rel=1e-12)


def test_thm2_zero_t():
    assert thm2_upper(_config(ell=0), 0) == 0.5


def test_thm2_vacuous_at_small_n():
    config = _config(ell=0, n=1000)
    value = thm2_upper(config, 10)
    assert value == pytest.approx(9.341926757097135, rel=1e-12)
    curve = evaluate_bound_curve(config, [10])
    assert curve.entries[0].vacuous


def test_thm2_requires_no_constraint():
    with pytest.raises(ConstraintError):
        thm2_upper(_config(ell=1), 5)


def test_thm2_increment_scales_linearly_in_t():
    config = _config(ell=0, n=10**4)
    base = thm2_upper(config, 0)
    inc5 = thm2_upper(config, 5) - base
    inc10 = thm2_upper(config, 10) - base
    assert inc10 == pytest.approx(2.0 * inc5, rel=1e-12)


# ---------------------------------------------------------------------------
# n0 threshold


def test_n0_check_values():
    assert n0_check(_config(ell=0, n=10**6), 10) is True
    assert n0_check(_config(ell=0, n=100), 10) is False
    assert n0_check(_config(ell=0, n=10**6), 1) is True


def test_n0_check_requires_no_constraint():
    with pytest.raises(ConstraintError):
        n0_check(_config(ell=1), 10)


# ---------------------------------------------------------------------------
# tail mass


def test_tail_mass_uniform_exact():
    dist = UtilityDistribution.uniform(0.0, 1.0)
    assert tail_mass(dist, 0.037) == pytest.approx(0.037, abs=1e-15)


def test_tail_mass_full_support():
    for dist in (
        UtilityDistribution.uniform(0.2, 1.0),
        UtilityDistribution.truncated_normal(0.5, 0.1, 0.0, 1.0),
    ):
        assert tail_mass(dist, 0.999999) == pytest.approx(1.0, abs=1e-6)


def test_tail_mass_matches_sampling_oracle():
    dist = UtilityDistribution.truncated_normal(0.5, 0.1, 0.0, 1.0)
    value = tail_mass(dist, 0.2)
    draws = sample_latent(dist, 10**6, rngmod.substream(99, 3))
    estimate = float(np.mean(draws >= 0.8 * dist.hi))
    sigma = math.sqrt(max(value * (1 - value), 1e-12) / len(draws))
    assert abs(value - estimate) < 3.0 * sigma + 1e-6


def test_tail_mass_powerlaw_closed_form():
    # density ~ x^2 on [0, 1]: P[X >= 0.8] = 1 - 0.8^3
    dist = UtilityDistribution.truncated_powerlaw(2.0, 0.0, 1.0)
    assert tail_mass(dist, 0.2) == pytest.approx(1.0 - 0.8**3, abs=1e-8)


def test_tail_mass_eps_domain():
    dist = UtilityDistribution.uniform(0.0, 1.0)
    with pytest.raises(DomainError):
        tail_mass(dist, 0.0)
    with pytest.raises(DomainError):
        tail_mass(dist, 1.0)


# ---------------------------------------------------------------------------
# assumption diagnostics


def test_beta_family_assumptions_pass():
    report = assumption_check_bias_family(
        beta_family(), grid=[1.5, 2.0, 4.0, 8.0], b=2.0, kl_pairs=[(5, 1)]
    )
    assert report.all_passed
    assert not report.failures
    assert {c.name for c in report.checks} == {
        "phi-increasing", "phi-concave",
        "inverse-moment-finite-decreasing", "median-inequality",
    }


def test_beta_inverse_moment_decreasing_points():
    spec = beta_family()
    assert spec.inverse_moment(3.0, 2.0) == pytest.approx(2.0)
    assert spec.inverse_moment(5.0, 2.0) == pytest.approx(1.5)


def test_constant_phi_family_fails_assumption_1():
    mock = BiasDistributionSpec(
        family="custom",
        sampler=lambda a, b, rng: 0.5,
        phi_fn=lambda a, b: 0.5,
        median_fn=lambda a, b: 0.5,
        inverse_moment_fn=lambda a, b: 2.0,
    )
    report = assumption_check_bias_family(mock, grid=[1.5, 2.0, 4.0], b=2.0)
    by_name = {c.name: c.passed for c in report.checks}
    assert by_name["phi-increasing"] is False


def test_assumption_grid_validation():
    with pytest.raises(DomainError):
        assumption_check_bias_family(beta_family(), grid=[2.0, 1.5], b=2.0)
    with pytest.raises(DomainError):
        assumption_check_bias_family(beta_family(), grid=[0.5, 2.0], b=2.0)


def test_evaluator_failures_reported_per_point():
    def bad_median(a, b):
        if a > 3:
            raise ValueError("no value here")
        return 0.4

    spec = BiasDistributionSpec(
        family="custom",
        sampler=lambda a, b, rng: 0.5,
        phi_fn=lambda a, b: a / (a + b),
        median_fn=bad_median,
        inverse_moment_fn=lambda a, b: (a + b - 1) / (a - 1),
    )
    report = assumption_check_bias_family(spec, grid=[2.0, 4.0], b=2.0)
    assert any("a=4" in msg for msg in report.failures)


# ---------------------------------------------------------------------------
# bound curves


def test_bound_curve_lower_non_decreasing():
    config = _config(ell=2, k=6)
    curve = evaluate_bound_curve(config, list(range(1, 30)))
    lows = curve.lower
    assert all(b >= a for a, b in zip(lows, lows[1:]))
    assert all(e.upper is None for e in curve.entries)
    assert all(e.params["ell"] == 2 for e in curve.entries)


def test_bound_curve_upper_with_n0():
    config = _config(ell=0, n=10**5)
    curve = evaluate_bound_curve(config, [1, 5, 10])
    assert all(e.lower is None for e in curve.entries)
    assert curve.entries[0].n0_ok is True
