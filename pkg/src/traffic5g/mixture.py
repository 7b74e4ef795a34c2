"""Single-user engaging-rate mixture, multi-user aggregation, bandwidth."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .rate_models import (
    AnalyticPdf, BatchTrafficParams, UhdTrafficParams, WebBrowsingParams,
    batch_rate_law, default_cs_params, default_vr_params, uhd_rate_law,
    web_rate_law, web_ratio_law,
)
from .rng import RngStream

TRAFFIC_TYPES = ("web", "cs", "vr", "uhd")
WEB_LAWS = ("closed_form", "sampled")
DEFAULT_SPECTRAL_EFF = 7.3 * 4
RUN_CHUNK = 1 << 16
_U64 = 2 ** 64
_MIN_SPAN = 1e-280


class ConfigError(ValueError):
    """An invalid scenario configuration."""


@dataclass(frozen=True)
class EngagingRates:
    """Probability that a user is engaged in each traffic type."""

    p_wb: float = 0.51
    p_cs: float = 0.45
    p_vr: float = 0.02
    p_uhd: float = 0.02

    def __post_init__(self):
        for name in ("p_wb", "p_cs", "p_vr", "p_uhd"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"engaging rate {name} must lie in [0, 1], got {v}")
        if abs(math.fsum(self.as_tuple()) - 1.0) > 1e-12:
            raise ConfigError("engaging rates must sum to 1")

    def as_tuple(self):
        return (self.p_wb, self.p_cs, self.p_vr, self.p_uhd)


@dataclass(frozen=True)
class ScenarioConfig:
    rates: EngagingRates = field(default_factory=EngagingRates)
    n_ue: int = 40
    n_runs: int = 10 ** 6
    seed: int = 1
    spectral_eff: float = DEFAULT_SPECTRAL_EFF
    web: WebBrowsingParams = field(default_factory=WebBrowsingParams)
    cs: BatchTrafficParams = field(default_factory=default_cs_params)
    vr: BatchTrafficParams = field(default_factory=default_vr_params)
    uhd: UhdTrafficParams = field(default_factory=UhdTrafficParams)

    def __post_init__(self):
        if int(self.n_ue) != self.n_ue or self.n_ue < 1:
            raise ConfigError(f"n_ue must be an integer >= 1, got {self.n_ue}")
        if int(self.n_runs) != self.n_runs or self.n_runs < 1:
            raise ConfigError(f"n_runs must be an integer >= 1, got {self.n_runs}")
        if not 0 <= self.seed < _U64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.spectral_eff > 0:
            raise ConfigError(f"spectral_eff must be > 0, got {self.spectral_eff}")
        if self.n_runs > _U64 or self.n_ue * self.slot > _U64:
            raise ConfigError("n_runs x n_ue exceeds the random stream index space")

    @property
    def slot(self):
        """Uniforms consumed per user draw."""
        return kernels.slot_size(self.cs.batch_n, self.vr.batch_n)

    def packed(self):
        return kernels.pack_mixture(self.rates, self.web, self.cs, self.vr, self.uhd)


# -- analytic mixture -------------------------------------------------------

def component_laws(cfg: ScenarioConfig, web_law="closed_form"):
    """Per-type rate laws keyed by ``TRAFFIC_TYPES``.

    ``web_law="closed_form"`` uses the closed-form law of ``ln(X)/T``;
    ``"sampled"`` uses the numerically evaluated law of ``8X/T`` that the
    Monte Carlo sampler follows.
    """
    if web_law not in WEB_LAWS:
        raise ConfigError(f"web_law must be one of {WEB_LAWS}, got {web_law!r}")
    web = web_rate_law(cfg.web) if web_law == "closed_form" else web_ratio_law(cfg.web)
    return {"web": web, "cs": batch_rate_law(cfg.cs), "vr": batch_rate_law(cfg.vr),
            "uhd": uhd_rate_law(cfg.uhd)}


def mixture_law(cfg: ScenarioConfig, web_law="closed_form"):
    """Engaging-rate weighted sum of the component laws, as an AnalyticPdf."""
    laws = component_laws(cfg, web_law)
    parts = [(w, laws[k]) for w, k in zip(cfg.rates.as_tuple(), TRAFFIC_TYPES) if w > 0]

    def density(r):
        return sum(w * law(r) for w, law in parts)

    def cdf(r):
        return sum(w * law.cdf(r) for w, law in parts)

    points = sorted({b for _, law in parts for b in law.breakpoints}
                    | {law.support_lo for _, law in parts if law.support_lo > 0}
                    | {law.support_hi for _, law in parts if math.isfinite(law.support_hi)})
    tails = [law.tail_index for _, law in parts if law.tail_index is not None]
    return AnalyticPdf(
        density=density,
        support_lo=min(law.support_lo for _, law in parts),
        support_hi=max(law.support_hi for _, law in parts),
        cdf=cdf, breakpoints=tuple(points), tail_index=min(tails) if tails else None)


def mixture_pdf(r, cfg: ScenarioConfig, web_law="closed_form"):
    return mixture_law(cfg, web_law)(r)


def mixture_cdf(r, cfg: ScenarioConfig, web_law="closed_form"):
    return mixture_law(cfg, web_law).cdf(r)


# -- Monte Carlo ------------------------------------------------------------

def sample_user_rate(rng: RngStream, cfg: ScenarioConfig, size=None, return_kinds=False):
    """Draw the traffic type by engaging rate, then one rate of that type.

    Each draw occupies a fixed block of ``cfg.slot`` uniforms of ``rng``.
    Kinds index ``TRAFFIC_TYPES``.
    """
    n = 1 if size is None else int(np.prod(size))
    fp, ip = cfg.packed()
    rates, kinds = kernels.backend.user_rates(
        rng.seed, rng.stream_index, rng.position, n, fp, ip)
    rng.advance(n * cfg.slot)
    if size is None:
        rates, kinds = float(rates[0]), int(kinds[0])
    else:
        rates, kinds = rates.reshape(size), np.asarray(kinds).reshape(size)
    return (rates, kinds) if return_kinds else rates


def aggregate_totals(cfg: ScenarioConfig, workers=1):
    """Per-run aggregate rates (unsorted, in run order).

    Run ``i`` reads random stream ``i`` and sums ``n_ue`` user draws. Runs
    are cut into fixed chunks that do not depend on ``workers``, so the
    result is bit-identical for any worker count.
    """
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    fp, ip = cfg.packed()
    bounds = [(a, min(a + RUN_CHUNK, cfg.n_runs)) for a in range(0, cfg.n_runs, RUN_CHUNK)]

    def run(chunk):
        return kernels.backend.aggregate(cfg.seed, chunk[0], chunk[1], cfg.n_ue, fp, ip)

    if workers == 1:
        parts = [run(c) for c in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, bounds))
    return np.concatenate(parts)


def aggregate_simulate(cfg: ScenarioConfig, workers=1, bins=1000):
    return EmpiricalDistribution.from_samples(aggregate_totals(cfg, workers), bins=bins)


# -- empirical statistics ---------------------------------------------------

class EmpiricalDistribution:
    """Sorted Monte Carlo samples plus a log-binned density histogram.

    The histogram has ``bins`` log-spaced bins spanning the observed range
    (linear bins if any sample is <= 0); ``density`` is per unit of the
    sample variable, so ``sum(density * widths) == 1``.
    """

    def __init__(self, sorted_samples, bin_edges, density):
        self.samples = sorted_samples
        self.bin_edges = bin_edges
        self.density = density
        self.samples_count = int(sorted_samples.size)
        self.mean = math.fsum(sorted_samples) / self.samples_count
        self.max = float(sorted_samples[-1])
        self.min = float(sorted_samples[0])

    @classmethod
    def from_samples(cls, samples, bins=1000):
        s = np.sort(np.asarray(samples, dtype=float).ravel())
        if s.size == 0:
            raise ValueError("cannot build a distribution from zero samples")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        lo, hi = float(s[0]), float(s[-1])
        if lo == hi:
            lo, hi = (lo * 0.999, hi * 1.001) if lo > 0 else (lo - 0.5, hi + 0.5)
        if hi - lo < _MIN_SPAN:
            # subnormal-scale spans would give infinite densities
            mid = 0.5 * (lo + hi)
            lo, hi = mid - 0.5 * _MIN_SPAN, mid + 0.5 * _MIN_SPAN
        edges = np.geomspace(lo, hi, bins + 1) if lo > 0 else np.linspace(lo, hi, bins + 1)
        edges[0], edges[-1] = lo, hi
        counts = np.histogram(s, bins=edges)[0]
        density = counts / (s.size * np.diff(edges))
        s.setflags(write=False)
        return cls(s, edges, density)

    @property
    def histogram(self):
        """``(bin_lo, bin_hi, density)`` arrays."""
        return self.bin_edges[:-1], self.bin_edges[1:], self.density

    def percentile(self, level):
        return percentile(self, level)

    def cdf(self, x):
        """Empirical CDF (fraction of samples <= x)."""
        return np.searchsorted(self.samples, x, side="right") / self.samples_count

    def histogram_mode(self):
        """Geometric centre of the highest-density bin."""
        i = int(np.argmax(self.density))
        lo, hi = self.bin_edges[i], self.bin_edges[i + 1]
        return math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)


def percentile(dist: EmpiricalDistribution, level):
    """Order-statistic quantile, linearly interpolated between neighbours."""
    if dist.samples_count == 0:
        raise ValueError("empty distribution")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    return float(np.quantile(dist.samples, level, method="linear"))


def bandwidth_required(rate, spectral_eff=DEFAULT_SPECTRAL_EFF):
    """Bandwidth (Hz) needed to carry ``rate`` (bits/s) at ``spectral_eff``.

    Among the doubles within one ulp of ``rate / spectral_eff`` the one whose
    product with ``spectral_eff`` rounds back to ``rate`` is preferred, so the
    round trip is exact whenever such a double exists.
    """
    if not spectral_eff > 0:
        raise ConfigError(f"spectral_eff must be > 0, got {spectral_eff}")
    b = rate / spectral_eff
    if np.ndim(b) == 0:
        for cand in (b, math.nextafter(b, math.inf), math.nextafter(b, -math.inf)):
            if cand * spectral_eff == rate:
                return cand
        return b
    b = np.array(b, dtype=float)
    for direction in (np.inf, -np.inf):
        miss = b * spectral_eff != rate
        if not miss.any():
            break
        cand = np.nextafter(b, direction)
        fix = miss & (cand * spectral_eff == rate)
        b[fix] = cand[fix]
    return b
