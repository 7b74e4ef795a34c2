"""Acceptance gate: one test per criterion, each recording named checks.

The terminal summary prints one PASS/FAIL line per criterion. Thresholds are
the contract values; none is loosened to make a check pass.
"""

import dataclasses
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from traffic5g.cli import REFERENCE_BANDWIDTH_HZ, reference_comparison
from traffic5g.mixture import (
    DEFAULT_SPECTRAL_EFF, EngagingRates, ScenarioConfig, aggregate_totals, bandwidth_required,
    mixture_law, sample_user_rate,
)
from traffic5g.oracles import convolve_pdfs_numeric, ks_statistic, run_validation, tabulate_law
from traffic5g.rate_models import (
    CODEC_FACTORS, VideoFormat, batch_rate_mean, cs_rate_sample, uhd_avg_rate, uhd_rate_sample,
    vr_rate_sample,
)
from traffic5g.rng import RngStream

CFG = ScenarioConfig()
MC = 10 ** 6


def _within(value, target, rel):
    return abs(value / target - 1.0) <= rel


def _rel(value, target):
    return f"{value:.6g} vs {target:.6g} ({100 * (value / target - 1):+.2f}%)"


@pytest.mark.criterion(1, "UHD average-rate calculator extremes within 0.1%")
def test_uhd_calculator_extremes(acceptance):
    hevc = CODEC_FACTORS["hevc"]
    cases = [
        ("uncoded 4K 16bpp 23.976p", VideoFormat(3840, 2160, 16, 23.976), 3.182e9),
        ("uncoded 8K 32bpp 120p", VideoFormat(7680, 4320, 32, 120.0), 127.4e9),
        ("hevc 4K 16bpp 23.976p", VideoFormat(3840, 2160, 16, 23.976, hevc), 0.9546e9),
        ("hevc 8K 32bpp 60p", VideoFormat(7680, 4320, 32, 60.0, hevc), 19.11e9),
    ]
    for label, fmt, target in cases:
        got = uhd_avg_rate(fmt)
        acceptance.check(label, _within(got, target, 1e-3), _rel(got, target))
    acceptance.assert_all()


@pytest.mark.criterion(2, "content-sharing mean 135 Mbps +-5%, max > 200 Mbps, < 10 s")
def test_content_sharing_model(acceptance):
    t0 = time.perf_counter()
    x = cs_rate_sample(RngStream(CFG.seed, 0), CFG.cs, MC)
    wall = time.perf_counter() - t0
    acceptance.check("empirical mean", _within(x.mean(), 135e6, 0.05), _rel(x.mean(), 135e6))
    analytic = batch_rate_mean(CFG.cs)
    acceptance.check("analytic mean", _within(analytic, 135e6, 0.05), _rel(analytic, 135e6))
    acceptance.check("empirical max > 200 Mbps", x.max() > 200e6, f"{x.max():.6g}")
    acceptance.check("runtime < 10 s", wall < 10.0, f"{wall:.2f} s")
    acceptance.assert_all()


@pytest.mark.criterion("3a", "VR empirical mean 8 Gbps +-5%")
def test_vr_model_mean(acceptance):
    x = vr_rate_sample(RngStream(CFG.seed, 0), CFG.vr, MC)
    acceptance.check("empirical mean", _within(x.mean(), 8e9, 0.05), _rel(x.mean(), 8e9))
    acceptance.assert_all()


@pytest.mark.criterion("3b", "UHD empirical mean 4 Gbps +-20%")
def test_uhd_model_mean(acceptance):
    # expected to fail: the model's exact mean is E[X] E[1/T] = 4.806 Gbps,
    # 20.1% above 4 Gbps (see the decisions ledger)
    x = uhd_rate_sample(RngStream(CFG.seed, 0), CFG.uhd, MC)
    acceptance.check("empirical mean", _within(x.mean(), 4e9, 0.20), _rel(x.mean(), 4e9))
    acceptance.assert_all()


@pytest.mark.criterion(4, "single-user mixture mean 318.4 Mbps +-10%, max > 20 Gbps in 5 seeds")
def test_single_user_mixture(acceptance):
    maxima = []
    for seed in range(1, 6):
        x = sample_user_rate(RngStream(seed, 0), CFG, MC)
        if seed == 1:
            acceptance.check("mean (seed 1)", _within(x.mean(), 318.4e6, 0.10),
                             _rel(x.mean(), 318.4e6))
        maxima.append(x.max())
    acceptance.check("max > 20 Gbps in some seed", max(maxima) > 20e9,
                     " ".join(f"{m / 1e9:.2f}" for m in maxima) + " Gbps")
    acceptance.assert_all()


@pytest.mark.criterion(5, "aggregate of 40 users: mean/p95/p99 within 10%, under 5 minutes")
def test_aggregate_statistics(acceptance, default_aggregate_run):
    dist, wall = default_aggregate_run
    acceptance.check("runs", dist.samples_count == MC, str(dist.samples_count))
    acceptance.check("mean", _within(dist.mean, 12.75e9, 0.10), _rel(dist.mean, 12.75e9))
    p95, p99 = dist.percentile(0.95), dist.percentile(0.99)
    acceptance.check("p95", _within(p95, 29e9, 0.10), _rel(p95, 29e9))
    acceptance.check("p99", _within(p99, 38e9, 0.10), _rel(p99, 38e9))
    acceptance.check("wall time < 300 s (4 workers)", wall < 300.0, f"{wall:.1f} s")
    acceptance.assert_all()


@pytest.mark.criterion(6, "bandwidth round trip exact; reference gap surfaced")
def test_bandwidth(acceptance, default_aggregate):
    s = DEFAULT_SPECTRAL_EFF
    summary = {}
    for key, q in (("p95", 0.95), ("p99", 0.99)):
        rate = default_aggregate.percentile(q)
        bw = bandwidth_required(rate, s)
        summary[f"bandwidth_{key}"] = bw
        acceptance.check(f"{key} round trip", bw * s == rate, f"{bw!r} Hz x {s!r} vs {rate!r}")
    acceptance.check("29.2 Gbps -> 1 GHz", bandwidth_required(29.2e9, s) == 1e9,
                     repr(bandwidth_required(29.2e9, s)))
    comp = reference_comparison(summary)
    for key, c in comp.items():
        acceptance.check(f"{key} reported against {REFERENCE_BANDWIDTH_HZ[key] / 1e6:.0f} MHz",
                         c["reference_hz"] == REFERENCE_BANDWIDTH_HZ[key]
                         and c["computed_hz"] == summary[f"bandwidth_{key}"],
                         f"computed {c['computed_hz'] / 1e6:.1f} MHz ({100 * c['rel_diff']:+.1f}%)")
    acceptance.assert_all()


@pytest.mark.criterion(7, "closed forms match oracles (<1e-6), KS < 0.01 at 1e5, norm 1+-1e-4")
def test_oracle_equivalence(acceptance):
    for rep in run_validation(CFG, n_samples=100_000):
        if rep.max_rel_pdf_gap == rep.max_rel_pdf_gap:  # skip NaN (no closed form)
            acceptance.check(f"{rep.name} pdf vs oracle", rep.max_rel_pdf_gap < 1e-6,
                             f"{rep.max_rel_pdf_gap:.3g}")
        acceptance.check(f"{rep.name} KS", rep.n_samples == 100_000 and rep.ks_distance < 0.01,
                         f"{rep.ks_distance:.4g}")
        acceptance.check(f"{rep.name} normalization", rep.normalization_error < 1e-4,
                         f"{rep.normalization_error:.3g}")
        acceptance.check(f"{rep.name} suite verdict", rep.passed, ",".join(rep.failures) or "ok")
    acceptance.assert_all()


def _cli(tmp_path, tag, *argv):
    out = tmp_path / f"{tag}.csv"
    subprocess.run([sys.executable, "-m", "traffic5g", *argv, "--out", str(out)], check=True,
                   capture_output=True)
    blob = out.read_bytes()
    js = out.with_suffix(".json")
    return blob, js.read_bytes() if js.exists() else b""


@pytest.mark.criterion(8, "byte-identical CSV/JSON across runs and worker counts")
def test_determinism(acceptance, tmp_path):
    commands = [["pdf", "cs"], ["pdf", "web"], ["mixture"], ["aggregate"], ["bandwidth"],
                ["uhd-table", "--codec", "hevc"]]
    for cmd in commands:
        runs = [_cli(tmp_path, f"{cmd[0]}{i}", "--runs", "100000", "--seed", "3",
                     "--workers", w, *cmd) for i, w in enumerate(("1", "4", "1"))]
        same = runs[0] == runs[1] == runs[2]
        acceptance.check(" ".join(cmd), same and len(runs[0][0]) > 0,
                         f"{len(runs[0][0])} + {len(runs[0][1])} bytes")
    acceptance.assert_all()


@pytest.mark.criterion(9, "two-user aggregate vs numeric self-convolution, KS < 0.02")
def test_small_instance_convolution(acceptance):
    cfg = dataclasses.replace(CFG, n_ue=2, n_runs=100_000)
    single = tabulate_law(mixture_law(cfg, "sampled"))
    conv = convolve_pdfs_numeric([single, single])
    totals = np.sort(aggregate_totals(cfg))
    d = ks_statistic(totals, conv.cdf)
    acceptance.check("KS", d < 0.02, f"{d:.4g}")
    acceptance.assert_all()


def test_acceptance_does_not_pick_seeds():
    # the gate uses the default scenario seed throughout
    assert CFG.seed == 1
    assert CFG.rates == EngagingRates()
