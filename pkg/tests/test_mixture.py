import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from traffic5g.mixture import (
    DEFAULT_SPECTRAL_EFF, TRAFFIC_TYPES, ConfigError, EmpiricalDistribution, EngagingRates,
    ScenarioConfig, aggregate_simulate, aggregate_totals, bandwidth_required,
    component_laws, mixture_cdf, mixture_law, mixture_pdf, percentile, sample_user_rate,
)
from traffic5g.oracles import ks_statistic, normalization_check
from traffic5g.rate_models import (
    batch_rate_mean, uhd_rate_mean, uhd_rate_pdf, web_rate_pdf, web_ratio_cdf,
)
from traffic5g.rng import RngStream

CFG = ScenarioConfig()


def _one_hot(kind, cfg=CFG):
    w = [1.0 if t == kind else 0.0 for t in TRAFFIC_TYPES]
    return dataclasses.replace(cfg, rates=EngagingRates(*w))


# -- configuration ------------------------------------------------------------

def test_engaging_rates_must_sum_to_one():
    with pytest.raises(ConfigError, match="sum to 1"):
        EngagingRates(0.5, 0.45, 0.02, 0.02)
    with pytest.raises(ConfigError):
        EngagingRates(1.2, -0.2, 0.0, 0.0)


@pytest.mark.parametrize("kw", [dict(n_ue=0), dict(n_runs=0), dict(seed=-1), dict(seed=2 ** 64),
                                dict(spectral_eff=0.0), dict(n_ue=2.5)])
def test_scenario_config_rejects(kw):
    with pytest.raises(ConfigError):
        ScenarioConfig(**kw)


def test_default_slot_size():
    assert CFG.slot == 51


# -- analytic mixture -------------------------------------------------------------

def test_pure_web_mixture_is_web_pdf():
    r = np.geomspace(10.0, 1e4, 30)
    np.testing.assert_array_equal(mixture_pdf(r, _one_hot("web")), web_rate_pdf(r, CFG.web))


@pytest.mark.parametrize("web_law", ["closed_form", "sampled"])
def test_mixture_normalizes(web_law):
    assert normalization_check(mixture_law(CFG, web_law)) < 1e-3


def test_mixture_at_one_gbps_is_uhd_share():
    # at 1 Gbps web and cs carry no mass and vr is ~1e-30 relative to uhd
    assert mixture_pdf(1e9, CFG) == pytest.approx(0.02 * uhd_rate_pdf(1e9, CFG.uhd), rel=1e-6)


def test_mixture_cdf_limits_and_weights():
    assert mixture_cdf(0.0, CFG) == 0.0
    assert mixture_cdf(1e12, CFG) == pytest.approx(1.0, abs=1e-12)
    # between cs and uhd supports: web + cs shares are fully counted
    assert mixture_cdf(5e8, CFG) == pytest.approx(0.51 + 0.45, abs=1e-6)


def test_component_laws_reject_unknown_web_law():
    with pytest.raises(ConfigError):
        component_laws(CFG, "exact")


# -- single-user sampler -------------------------------------------------------

@pytest.mark.parametrize("kind", TRAFFIC_TYPES)
def test_one_hot_draws_only_that_type(kind):
    cfg = _one_hot(kind)
    x, k = sample_user_rate(RngStream(3, 0), cfg, 5000, return_kinds=True)
    assert np.all(k == TRAFFIC_TYPES.index(kind))
    assert np.all(x > 0)


@pytest.mark.parametrize("kind", ["cs", "vr", "uhd"])
def test_one_hot_sampler_matches_component_cdf(kind):
    law = component_laws(CFG)[kind]
    x = sample_user_rate(RngStream(4, 0), _one_hot(kind), 100_000)
    assert ks_statistic(np.sort(x), law.cdf) < 0.01


def test_web_draws_follow_ratio_law():
    x = sample_user_rate(RngStream(5, 0), _one_hot("web"), 100_000)
    assert ks_statistic(np.sort(x), lambda r: web_ratio_cdf(r, CFG.web)) < 0.01


def test_kind_frequencies_match_engaging_rates():
    _, k = sample_user_rate(RngStream(6, 0), CFG, 400_000, return_kinds=True)
    freq = np.bincount(k, minlength=4) / k.size
    np.testing.assert_allclose(freq, CFG.rates.as_tuple(), atol=0.003)


def test_sampler_advances_by_slot():
    rng = RngStream(7, 2)
    a = sample_user_rate(rng, CFG, 10)
    assert rng.position == 10 * CFG.slot
    b = sample_user_rate(rng, CFG, 5)
    whole = sample_user_rate(RngStream(7, 2), CFG, 15)
    np.testing.assert_array_equal(np.concatenate([a, b]), whole)
    assert isinstance(sample_user_rate(RngStream(7, 2), CFG), float)


def test_single_user_mixture_matches_sampled_mixture_law():
    cfg = dataclasses.replace(CFG, n_ue=1, n_runs=100_000)
    totals = aggregate_totals(cfg)
    assert ks_statistic(np.sort(totals), mixture_law(cfg, "sampled").cdf) < 0.01


# -- aggregation --------------------------------------------------------------

def test_aggregate_independent_of_worker_count():
    cfg = dataclasses.replace(CFG, n_runs=150_000)
    one = aggregate_totals(cfg, workers=1)
    assert one.size == 150_000
    for w in (2, 3):
        assert aggregate_totals(cfg, workers=w).tobytes() == one.tobytes()


def test_aggregate_run_is_sum_of_its_stream():
    cfg = dataclasses.replace(CFG, n_runs=5, n_ue=7)
    totals = aggregate_totals(cfg)
    for i in range(5):
        users = sample_user_rate(RngStream(cfg.seed, i), cfg, 7)
        assert totals[i] == pytest.approx(math.fsum(users), rel=1e-12)


def test_aggregate_rejects_zero_workers():
    with pytest.raises(ConfigError):
        aggregate_totals(dataclasses.replace(CFG, n_runs=10), workers=0)


def test_aggregate_mean_is_linear(default_aggregate):
    # web has no finite mean; its draws are ~kbit/s and barely move the sum
    expected = 40 * (0.45 * batch_rate_mean(CFG.cs) + 0.02 * batch_rate_mean(CFG.vr)
                     + 0.02 * uhd_rate_mean(CFG.uhd))
    assert default_aggregate.mean == pytest.approx(expected, rel=0.02)


def test_aggregate_histogram_mode(default_aggregate):
    assert 2e9 <= default_aggregate.histogram_mode() <= 4e9


def test_aggregate_simulate_wraps_totals():
    cfg = dataclasses.replace(CFG, n_runs=2000)
    dist = aggregate_simulate(cfg, bins=50)
    assert dist.density.size == 50
    np.testing.assert_array_equal(dist.samples, np.sort(aggregate_totals(cfg)))


# -- empirical distribution -----------------------------------------------------

def test_percentile_small_sample():
    d = EmpiricalDistribution.from_samples([3.0, 1.0, 2.0])
    assert percentile(d, 0.5) == 2.0
    assert d.percentile(0.25) == 1.5
    with pytest.raises(ValueError):
        d.percentile(1.0)


@settings(max_examples=60, deadline=None)
@given(xs=st.lists(st.floats(1e-3, 1e12), min_size=1, max_size=200),
       a=st.floats(0.001, 0.999), b=st.floats(0.001, 0.999))
def test_percentile_monotone(xs, a, b):
    d = EmpiricalDistribution.from_samples(xs)
    lo, hi = sorted((a, b))
    assert d.min <= d.percentile(lo) <= d.percentile(hi) <= d.max


@settings(max_examples=40, deadline=None)
@given(xs=st.lists(st.floats(-1e6, 1e12), min_size=1, max_size=300))
def test_histogram_integrates_to_one(xs):
    d = EmpiricalDistribution.from_samples(xs, bins=37)
    lo, hi, dens = d.histogram
    assert math.fsum(dens * (hi - lo)) == pytest.approx(1.0, abs=1e-9)


def test_empirical_rejects_bad_input():
    with pytest.raises(ValueError):
        EmpiricalDistribution.from_samples([])
    with pytest.raises(ValueError):
        EmpiricalDistribution.from_samples([1.0, math.nan])


def test_empirical_samples_read_only():
    d = EmpiricalDistribution.from_samples([2.0, 1.0])
    with pytest.raises(ValueError):
        d.samples[0] = 5.0
    np.testing.assert_array_equal(d.cdf([0.5, 1.0, 1.5, 2.0]), [0.0, 0.5, 0.5, 1.0])


# -- bandwidth -----------------------------------------------------------------------

def test_bandwidth_examples():
    assert DEFAULT_SPECTRAL_EFF == pytest.approx(29.2)
    assert bandwidth_required(29.2e9) == pytest.approx(1e9, rel=1e-15)
    assert bandwidth_required(12.75e9) == pytest.approx(436.64e6, rel=1e-4)
    assert bandwidth_required(0.0) == 0.0
    np.testing.assert_allclose(bandwidth_required(np.array([29.2e9, 0.0]), 7.3), [4e9, 0.0])
    with pytest.raises(ConfigError):
        bandwidth_required(1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(r=st.floats(1e6, 1e11), s=st.floats(0.5, 60.0))
def test_bandwidth_round_trip_when_representable(r, s):
    b = bandwidth_required(r, s)
    candidates = (r / s, math.nextafter(r / s, math.inf), math.nextafter(r / s, -math.inf))
    assert b in candidates
    if any(c * s == r for c in candidates):
        assert b * s == r
    arr = bandwidth_required(np.array([r, r]), s)
    assert arr[0] == b and arr[1] == b
