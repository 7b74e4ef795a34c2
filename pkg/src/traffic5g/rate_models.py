"""Instantaneous data-rate laws for web browsing, content sharing, VR and UHD video.

All rates are bits per second, all times seconds. The one exception is the
closed-form web density :func:`web_rate_pdf`, which is the law of
``ln(X_bytes) / T`` as derived from the log-packet-size joint density; the
web sampler follows ``R = X / T`` and has its own numerically evaluated law
(:func:`web_ratio_pdf`, :func:`web_ratio_cdf`).
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaincinv, gammaln

from .distributions import (
    ErlangParams, ExponentialParams, TruncLognormalParams, TruncParetoParams,
    _out, erlang_sample, exponential_sample, trunc_lognormal_sample,
    trunc_pareto_cdf, trunc_pareto_moment, trunc_pareto_sample,
    truncated_std_normal,
)

BITS_PER_BYTE = 8
_LOG_TINY_MASS = math.log(1e-300)
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class AnalyticPdf:
    """A density over ``[support_lo, support_hi]`` with optional CDF.

    ``breakpoints`` are characteristic points (modes, kinks, quantiles) that
    quadrature and tabulation should split at. ``tail_index`` ``a`` declares
    ``density(r) ~ r**-a`` as ``r -> inf``, so moments ``k >= a - 1`` diverge.
    A law with ``atom`` set is a point mass and has no density.
    """

    density: Callable
    support_lo: float
    support_hi: float = math.inf
    cdf: Optional[Callable] = None
    breakpoints: tuple = ()
    tail_index: Optional[float] = None
    atom: Optional[float] = None

    def __call__(self, r):
        if self.atom is not None:
            raise ValueError("a point mass has no density")
        ra = np.asarray(r, dtype=float)
        inside = (ra >= self.support_lo) & (ra <= self.support_hi)
        vals = np.zeros(ra.shape)
        if inside.any():
            vals[inside] = self.density(ra[inside])
        return _out(vals, r)

    @classmethod
    def point_mass(cls, x0):
        x0 = float(x0)
        return cls(density=lambda r: np.zeros(np.shape(r)), support_lo=x0,
                   support_hi=x0, cdf=lambda r: _out(np.where(np.asarray(r) >= x0, 1.0, 0.0), r),
                   atom=x0)


@dataclass(frozen=True)
class WebBrowsingParams:
    packet: TruncLognormalParams = field(
        default_factory=lambda: TruncLognormalParams(mu=8.35, sigma=1.37, a_low=100.0, a_up=2e6))
    iat: ExponentialParams = field(default_factory=lambda: ExponentialParams(30.0))


@dataclass(frozen=True)
class BatchTrafficParams:
    """Fixed-size packets sent in batches of ``batch_n`` (content sharing, VR).

    ``packet_size`` is in bits; ``rate_lambda`` is the per-packet arrival rate.
    """

    packet_size: float
    rate_lambda: float
    batch_n: int = 50

    def __post_init__(self):
        if not self.packet_size > 0:
            raise ValueError(f"packet_size must be > 0, got {self.packet_size}")
        if not self.rate_lambda > 0:
            raise ValueError(f"rate_lambda must be > 0, got {self.rate_lambda}")
        if int(self.batch_n) != self.batch_n or self.batch_n < 2:
            raise ValueError(f"batch_n must be an integer >= 2, got {self.batch_n}")

    @property
    def batch_bits(self):
        return self.batch_n * self.packet_size


@dataclass(frozen=True)
class UhdTrafficParams:
    """Truncated Pareto packet size (bits) over truncated Pareto IAT (seconds)."""

    packet: TruncParetoParams = field(
        default_factory=lambda: TruncParetoParams(alpha=1.67, a_low=3.32e6, a_up=20.75e6))
    iat: TruncParetoParams = field(
        default_factory=lambda: TruncParetoParams(alpha=1.67, a_low=0.832e-3, a_up=5.2e-3))


def default_cs_params():
    return BatchTrafficParams(packet_size=2e6 * BITS_PER_BYTE, rate_lambda=8.33, batch_n=50)


def default_vr_params():
    return BatchTrafficParams(packet_size=20e6 * BITS_PER_BYTE, rate_lambda=50.0, batch_n=50)


def _positive(r, what):
    ra = np.asarray(r, dtype=float)
    if np.any(~(ra > 0)):
        raise ValueError(f"{what} is defined for r > 0 only")
    return ra


# -- web browsing -----------------------------------------------------------

def web_rate_pdf(r, p: WebBrowsingParams):
    """Closed-form density of ``ln(X)/T`` (ln-bytes per second).

    Completing the square in the joint density of ``Y = ln X`` and ``T``
    turns the ratio integral into ``K_bar`` times the partial first moment
    of a normal law ``N(mu_bar, sigma_bar)`` over ``[ln a_low / r, ln a_up / r]``,
    i.e. ``K_bar * mass * truncated_mean``.

    Returns 0 where the truncation window holds no representable mass.
    """
    ra = _positive(r, "web_rate_pdf")
    pk, t_mean = p.packet, p.iat.mean_iat
    mu, sigma = pk.mu, pk.sigma
    mu_bar = mu / ra - sigma ** 2 / (t_mean * ra ** 2)
    sigma_bar = sigma / ra
    lo = math.log(pk.a_low) / ra
    hi = math.log(pk.a_up) / ra
    m_std, log_mass = truncated_std_normal((lo - mu_bar) / sigma_bar, (hi - mu_bar) / sigma_bar)
    log_k = -0.5 * _LOG_2PI - math.log(t_mean) - math.log(sigma) - math.log(pk.mass)
    # ((mu/r)^2 - mu_bar^2) / (2 sigma_bar^2) simplifies to (mu/r + mu_bar) / (2 T)
    log_k_bar = 0.5 * _LOG_2PI + np.log(sigma_bar) + log_k - (mu / ra + mu_bar) / (2.0 * t_mean)
    mean = mu_bar + sigma_bar * m_std
    with np.errstate(over="ignore", invalid="ignore"):
        dens = np.exp(log_k_bar + log_mass) * mean
    return _out(np.where(log_mass >= _LOG_TINY_MASS, dens, 0.0), r)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@lru_cache(maxsize=32)
def _log_packet_rule(pk: TruncLognormalParams, panels=64):
    """Composite Gauss-Legendre nodes/weights for E[g(ln X)] over the window."""
    edges = np.linspace(math.log(pk.a_low), math.log(pk.a_up), panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    y = (mid[:, None] + half[:, None] * _GL_NODES).ravel()
    z = (y - pk.mu) / pk.sigma
    w = (half[:, None] * _GL_WEIGHTS).ravel()
    w = w * np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * pk.sigma * pk.mass)
    return y, w


def _packet_expectation(pk, r, fn, chunk=2048):
    """``E[fn(ln X, r)]`` for each ``r``; ``fn`` broadcasts (r[:, None], y[None, :])."""
    y, w = _log_packet_rule(pk)
    ra = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty(ra.shape)
    flat, res = ra.ravel(), out.ravel()
    for i in range(0, flat.size, chunk):
        res[i:i + chunk] = fn(y[None, :], flat[i:i + chunk, None]) @ w
    return out


def web_log_rate_cdf(r, p: WebBrowsingParams):
    """CDF of ``ln(X)/T``: ``P(T >= ln X / r) = E[exp(-ln X / (r T))]``."""
    ra = np.asarray(r, dtype=float)
    rs = np.where(ra > 0, ra, 1.0)
    t_mean = p.iat.mean_iat
    vals = _packet_expectation(p.packet, rs, lambda y, rr: np.exp(-y / (rr * t_mean)))
    return _out(np.where(ra > 0, vals.reshape(ra.shape), 0.0), r)


def web_ratio_pdf(r, p: WebBrowsingParams):
    """Density of the sampled web rate ``8 X / T`` (bits/s).

    ``f(r) = E[X exp(-X / (r T_wb))] / (r^2 T_wb)``, evaluated by composite
    Gauss-Legendre quadrature over ``ln X``. Tail ``~ r**-2``.
    """
    ra = np.asarray(r, dtype=float)
    rs = np.where(ra > 0, ra, 1.0)
    t_mean = p.iat.mean_iat

    def integrand(y, rr):
        x = BITS_PER_BYTE * np.exp(y)
        return x * np.exp(-x / (rr * t_mean))

    vals = _packet_expectation(p.packet, rs, integrand).reshape(ra.shape) / (rs ** 2 * t_mean)
    return _out(np.where(ra > 0, vals, 0.0), r)


def web_ratio_cdf(r, p: WebBrowsingParams):
    """CDF of the sampled web rate: ``E[exp(-8 X / (r T_wb))]``."""
    ra = np.asarray(r, dtype=float)
    rs = np.where(ra > 0, ra, 1.0)
    t_mean = p.iat.mean_iat
    vals = _packet_expectation(
        p.packet, rs, lambda y, rr: np.exp(-BITS_PER_BYTE * np.exp(y) / (rr * t_mean)))
    return _out(np.where(ra > 0, vals.reshape(ra.shape), 0.0), r)


def web_rate_sample(rng, p: WebBrowsingParams, size=None):
    """Instantaneous web rate ``8 X / T`` in bits/s."""
    x = trunc_lognormal_sample(rng, p.packet, size)
    t = exponential_sample(rng, p.iat, size)
    return BITS_PER_BYTE * x / t


def web_log_rate_sample(rng, p: WebBrowsingParams, size=None):
    """``ln(X_bytes) / T``, the variable whose law :func:`web_rate_pdf` gives."""
    x = trunc_lognormal_sample(rng, p.packet, size)
    t = exponential_sample(rng, p.iat, size)
    return np.log(x) / t


# -- content sharing and VR (batched fixed-size packets) ---------------------

def _batch_x(ra, p):
    with np.errstate(divide="ignore"):
        return np.where(ra > 0, p.rate_lambda * p.batch_bits / np.where(ra > 0, ra, 1.0), np.inf)


def batch_rate_cdf(r, p: BatchTrafficParams):
    """``P(N S / T < r)`` with ``T ~ Erlang(N, lambda)``: a Poisson partial sum."""
    ra = np.asarray(r, dtype=float)
    x = np.atleast_1d(_batch_x(ra, p))
    n = np.arange(p.batch_n)
    out = np.zeros(x.shape)
    finite = np.isfinite(x) & (x > 0)
    xf = x[finite][:, None]
    log_terms = -xf + n * np.log(xf) - gammaln(n + 1)
    out[finite] = np.exp(log_terms).sum(axis=1)
    out[x == 0] = 1.0
    return _out(np.minimum(out, 1.0).reshape(ra.shape), r)


def batch_rate_pdf(r, p: BatchTrafficParams):
    """``(N S lambda)^N / ((N-1)! r^(N+1)) * exp(-lambda N S / r)`` for r > 0."""
    ra = np.asarray(r, dtype=float)
    rs = np.where(ra > 0, ra, 1.0)
    n, c = p.batch_n, p.rate_lambda * p.batch_bits
    log_f = n * math.log(c) - gammaln(n) - (n + 1) * np.log(rs) - c / rs
    return _out(np.where(ra > 0, np.exp(log_f), 0.0), r)


def batch_rate_sample(rng, p: BatchTrafficParams, size=None):
    t = erlang_sample(rng, ErlangParams(p.batch_n, p.rate_lambda), size)
    return p.batch_bits / t


def batch_rate_mean(p: BatchTrafficParams):
    return p.batch_bits * p.rate_lambda / (p.batch_n - 1)


def batch_rate_mode(p: BatchTrafficParams):
    return p.rate_lambda * p.batch_bits / (p.batch_n + 1)


def batch_rate_quantiles(p: BatchTrafficParams, levels):
    """Rate quantiles via the Erlang quantiles of the batch duration."""
    levels = np.asarray(levels, dtype=float)
    t = gammaincinv(p.batch_n, 1.0 - levels) / p.rate_lambda
    return p.batch_bits / t


cs_rate_cdf = batch_rate_cdf
cs_rate_pdf = batch_rate_pdf
cs_rate_sample = batch_rate_sample
vr_rate_cdf = batch_rate_cdf
vr_rate_sample = batch_rate_sample


def vr_rate_pdf(r, p: BatchTrafficParams):
    """VR rate density.

    VR traffic is content-sharing traffic with bigger packets and a shorter
    IAT, so the rate ``N S_vr / T`` has the same inverse-Erlang form.
    """
    return batch_rate_pdf(r, p)


# -- UHD video --------------------------------------------------------------

def uhd_rate_support(p: UhdTrafficParams):
    return p.packet.a_low / p.iat.a_up, p.packet.a_up / p.iat.a_low


def _uhd_window(ra, p):
    x, t = p.packet, p.iat
    rs = np.where(ra > 0, ra, 1.0)
    t_lo = np.maximum(x.a_low / rs, t.a_low)
    t_hi = np.minimum(x.a_up / rs, t.a_up)
    return rs, t_lo, t_hi, (ra > 0) & (t_lo < t_hi)


def uhd_rate_pdf(r, p: UhdTrafficParams):
    """Density of packet/IAT for truncated-Pareto packet size and IAT.

    Integrating ``t * K (r t)^(-ax-1) t^(-at-1)`` over the window
    ``max(x_low/r, t_low) <= t <= min(x_up/r, t_up)`` gives
    ``K r^(-ax-1) (t_lo^(1-abar) - t_hi^(1-abar)) / (abar - 1)`` with
    ``abar = ax + at + 1``. Evaluated in ratio form so no power overflows.
    """
    ra = np.asarray(r, dtype=float)
    x, t = p.packet, p.iat
    rs, t_lo, t_hi, valid = _uhd_window(ra, p)
    s = x.alpha + t.alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = (x.alpha * t.alpha / (s * x.span * t.span * rs)
                 * (x.a_low / (rs * t_lo)) ** x.alpha * (t.a_low / t_lo) ** t.alpha)
        dens = scale * -np.expm1(s * np.log(t_lo / t_hi))
    return _out(np.where(valid, dens, 0.0), r)


def uhd_rate_cdf(r, p: UhdTrafficParams):
    """Closed-form CDF ``P(X <= r T)`` of the UHD rate."""
    ra = np.asarray(r, dtype=float)
    x, t = p.packet, p.iat
    rs, t_lo, t_hi, valid = _uhd_window(ra, p)
    s = x.alpha + t.alpha
    above = 1.0 - trunc_pareto_cdf(x.a_up / rs, t)        # T >= x_up / r: X <= rT surely
    with np.errstate(divide="ignore", invalid="ignore"):
        middle = (trunc_pareto_cdf(t_hi, t) - trunc_pareto_cdf(t_lo, t)) / x.span
        middle -= (t.alpha / (s * t.span * x.span)
                   * (x.a_low / (rs * t_lo)) ** x.alpha * (t.a_low / t_lo) ** t.alpha
                   * -np.expm1(s * np.log(t_lo / t_hi)))
    out = above + np.where(valid, middle, 0.0)
    lo, hi = uhd_rate_support(p)
    out = np.where(ra <= lo, 0.0, np.where(ra >= hi, 1.0, np.clip(out, 0.0, 1.0)))
    return _out(out, r)


def uhd_rate_mean(p: UhdTrafficParams):
    """``E[X] * E[1/T]`` by independence."""
    return trunc_pareto_moment(p.packet, 1.0) * trunc_pareto_moment(p.iat, -1.0)


def uhd_rate_sample(rng, p: UhdTrafficParams, size=None):
    x = trunc_pareto_sample(rng, p.packet, size)
    t = trunc_pareto_sample(rng, p.iat, size)
    return x / t


# -- UHD average-rate calculator ---------------------------------------------

BPP_VALUES = (1, 2, 4, 8, 16, 24, 32)
FRAME_RATES = (120.0, 60.0, 59.94, 50.0, 30.0, 29.97, 25.0, 24.0, 23.976)
RESOLUTIONS = {"4K": (3840, 2160), "8K": (7680, 4320)}
CODEC_FACTORS = {"uncoded": 1.0, "h264": 0.5, "hevc": 0.5 * (1.0 - 0.4)}
PEAK_RATE_BPS = 20e9


@dataclass(frozen=True)
class VideoFormat:
    width: int
    height: int
    bpp: int
    frame_rate: float
    codec_factor: float = 1.0

    def __post_init__(self):
        if self.bpp not in BPP_VALUES:
            raise ValueError(f"bpp must be one of {BPP_VALUES}, got {self.bpp}")
        if self.frame_rate not in FRAME_RATES:
            raise ValueError(f"frame_rate must be one of {FRAME_RATES}, got {self.frame_rate}")
        if not 0 < self.codec_factor <= 1:
            raise ValueError(f"codec_factor must lie in (0, 1], got {self.codec_factor}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("resolution must be positive")

    @property
    def resolution_name(self):
        for name, wh in RESOLUTIONS.items():
            if wh == (self.width, self.height):
                return name
        return f"{self.width}x{self.height}"


def uhd_avg_rate(fmt: VideoFormat):
    """Average video rate: bpp x pixels x frame rate x codec factor (bits/s)."""
    return fmt.bpp * fmt.width * fmt.height * fmt.frame_rate * fmt.codec_factor


@dataclass(frozen=True)
class UhdTableRow:
    fmt: VideoFormat
    rate_bps: float
    supported: bool


def uhd_rate_table(codec_factor=1.0, bpps=(16, 24, 32), peak_rate=PEAK_RATE_BPS):
    """Every {4K, 8K} x ``bpps`` x frame-rate format, sorted by rate.

    ``supported`` marks rates that fit under ``peak_rate``.
    """
    rows = []
    for name, (w, h) in RESOLUTIONS.items():
        for bpp in bpps:
            for fr in FRAME_RATES:
                fmt = VideoFormat(w, h, bpp, fr, codec_factor)
                rate = uhd_avg_rate(fmt)
                rows.append(UhdTableRow(fmt, rate, rate <= peak_rate))
    rows.sort(key=lambda row: row.rate_bps)
    return rows


# -- law carriers -----------------------------------------------------------

def web_rate_law(p: WebBrowsingParams):
    """Closed-form law of ``ln(X)/T`` (ln-bytes per second)."""
    scale = p.packet.mu / p.iat.mean_iat
    return AnalyticPdf(
        density=lambda r: web_rate_pdf(r, p), support_lo=0.0, support_hi=math.inf,
        cdf=lambda r: web_log_rate_cdf(r, p),
        breakpoints=tuple(scale * 10.0 ** k for k in range(-2, 5)), tail_index=2.0)


def web_ratio_law(p: WebBrowsingParams):
    """Numerically evaluated law of the sampled web rate ``8 X / T`` (bits/s)."""
    scale = BITS_PER_BYTE * math.exp(p.packet.mu) / p.iat.mean_iat
    return AnalyticPdf(
        density=lambda r: web_ratio_pdf(r, p), support_lo=0.0, support_hi=math.inf,
        cdf=lambda r: web_ratio_cdf(r, p),
        breakpoints=tuple(scale * 10.0 ** k for k in range(-2, 7)), tail_index=2.0)


def batch_rate_law(p: BatchTrafficParams):
    q = batch_rate_quantiles(p, [1e-12, 1e-6, 1e-3, 0.5, 1 - 1e-3, 1 - 1e-6, 1 - 1e-12])
    return AnalyticPdf(
        density=lambda r: batch_rate_pdf(r, p), support_lo=0.0, support_hi=math.inf,
        cdf=lambda r: batch_rate_cdf(r, p), breakpoints=tuple(q),
        tail_index=float(p.batch_n + 1))


def uhd_rate_law(p: UhdTrafficParams):
    lo, hi = uhd_rate_support(p)
    kinks = sorted({p.packet.a_low / p.iat.a_low, p.packet.a_up / p.iat.a_up})
    return AnalyticPdf(
        density=lambda r: uhd_rate_pdf(r, p), support_lo=lo, support_hi=hi,
        cdf=lambda r: uhd_rate_cdf(r, p), breakpoints=tuple(k for k in kinks if lo < k < hi))
