"""Base probability laws used by the traffic models.

Truncated lognormal packet sizes, exponential and Erlang inter-arrival
times, truncated Pareto packet sizes and IATs, and standard-normal helpers.
Every density/CDF accepts scalars or arrays and returns the same kind.
Samplers draw from an :class:`~traffic5g.rng.RngStream` by inverse CDF.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, gammainc, gammaln, log_ndtr, ndtr, ndtri

_LOG_TINY_MASS = math.log(1e-300)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class ParameterError(ValueError):
    """Distribution parameters outside their domain."""


class TruncationUnderflowError(ArithmeticError):
    """A truncation interval carries (numerically) no probability mass."""


def _out(values, like):
    return float(values) if np.ndim(like) == 0 else values


@dataclass(frozen=True)
class TruncLognormalParams:
    """Lognormal packet size truncated to ``[a_low, a_up]`` bytes.

    ``mu`` and ``sigma`` are the mean and standard deviation of ``ln X``.
    """

    mu: float
    sigma: float
    a_low: float
    a_up: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if not 0 < self.a_low < self.a_up:
            raise ParameterError(
                f"need 0 < a_low < a_up, got a_low={self.a_low}, a_up={self.a_up}")

    @property
    def z_low(self):
        return (math.log(self.a_low) - self.mu) / self.sigma

    @property
    def z_up(self):
        return (math.log(self.a_up) - self.mu) / self.sigma

    @property
    def mass(self):
        """Standard-normal probability of the truncation window."""
        return float(np.exp(truncated_std_normal(self.z_low, self.z_up)[1]))


@dataclass(frozen=True)
class ExponentialParams:
    mean_iat: float

    def __post_init__(self):
        if not self.mean_iat > 0:
            raise ParameterError(f"mean_iat must be > 0, got {self.mean_iat}")


@dataclass(frozen=True)
class ErlangParams:
    shape_n: int
    rate_lambda: float

    def __post_init__(self):
        if int(self.shape_n) != self.shape_n or self.shape_n < 1:
            raise ParameterError(f"shape_n must be an integer >= 1, got {self.shape_n}")
        if not self.rate_lambda > 0:
            raise ParameterError(f"rate_lambda must be > 0, got {self.rate_lambda}")


@dataclass(frozen=True)
class TruncParetoParams:
    """Pareto law with shape ``alpha`` truncated to ``[a_low, a_up]``.

    The unit of the bounds is whatever the caller uses (bits, seconds).
    """

    alpha: float
    a_low: float
    a_up: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")
        if not 0 < self.a_low < self.a_up:
            raise ParameterError(
                f"need 0 < a_low < a_up, got a_low={self.a_low}, a_up={self.a_up}")

    @property
    def span(self):
        """Normalizer ``1 - (a_low / a_up) ** alpha``."""
        return -math.expm1(self.alpha * math.log(self.a_low / self.a_up))


# -- standard normal --------------------------------------------------------

def std_normal_cdf(z):
    return _out(ndtr(z), z)


def std_normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return _out(_INV_SQRT_2PI * np.exp(-0.5 * z * z), z)


def _phi_over_Phi(x):
    # phi(x) / Phi(x), finite for every x; tends to -x as x -> -inf, 0 as x -> inf
    with np.errstate(over="ignore"):
        return _SQRT_2_OVER_PI / erfcx(-x / math.sqrt(2.0))


def truncated_std_normal(a, b):
    """Mean and log-mass of a standard normal truncated to ``[a, b]``.

    Evaluated in the tail the interval sits in, so intervals far out in
    either tail keep full relative precision. Vectorized over ``a``/``b``.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    # mirror so that the interval leans towards -inf: |lo| >= |hi|
    with np.errstate(invalid="ignore"):
        flip = (a + b) > 0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    log_hi = log_ndtr(hi)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore", under="ignore"):
        w = np.exp(log_ndtr(lo) - log_hi)          # Phi(lo) / Phi(hi) in [0, 1]
        log_mass = log_hi + np.log1p(-w)
        # deep in the tail: Mills-ratio form, free of underflow
        tail = np.where(w > 0, _phi_over_Phi(lo) * w, 0.0)
        mean_tail = (tail - _phi_over_Phi(hi)) / (1.0 - w)
        # elsewhere: phi(lo) - phi(hi) as one expm1, exact for narrow or symmetric windows
        # |lo| >= |hi| here, so the expm1 argument is <= 0 and nothing overflows
        dphi = np.exp(-0.5 * hi * hi) * np.expm1(-0.5 * (lo - hi) * (lo + hi))
        mean_body = dphi * _INV_SQRT_2PI / np.exp(log_mass)
        mean = np.where(hi > -5.0, mean_body, mean_tail)
    both_inf = np.isneginf(lo) & np.isposinf(hi)
    mean = np.where(both_inf, 0.0, mean)
    log_mass = np.where(both_inf, 0.0, log_mass)
    return np.where(flip, -mean, mean), log_mass


def trunc_normal_mean(mu, sigma, lo, hi):
    """Mean of N(mu, sigma^2) truncated to ``[lo, hi]``.

    Equals ``mu + sigma*(phi(a) - phi(b)) / (Phi(b) - Phi(a))`` with
    ``a = (lo - mu)/sigma``, ``b = (hi - mu)/sigma``.

    Raises
    ------
    TruncationUnderflowError
        If ``Phi(b) - Phi(a) < 1e-300``.
    """
    mu_a = np.asarray(mu, dtype=float)
    sigma_a = np.asarray(sigma, dtype=float)
    if np.any(sigma_a <= 0):
        raise ParameterError("sigma must be > 0")
    if np.any(np.asarray(lo) >= np.asarray(hi)):
        raise ParameterError("need lo < hi")
    m, log_mass = truncated_std_normal((lo - mu_a) / sigma_a, (hi - mu_a) / sigma_a)
    if np.any(~(log_mass >= _LOG_TINY_MASS)):
        raise TruncationUnderflowError("truncation window carries no probability mass")
    out = mu_a + sigma_a * m
    return float(out) if out.ndim == 0 else out


# -- truncated lognormal ----------------------------------------------------

def trunc_lognormal_pdf(x, p: TruncLognormalParams):
    """Lognormal density renormalized to ``[a_low, a_up]``, zero outside."""
    xa = np.asarray(x, dtype=float)
    inside = (xa >= p.a_low) & (xa <= p.a_up)
    xs = np.where(inside, xa, p.a_low)
    z = (np.log(xs) - p.mu) / p.sigma
    dens = _INV_SQRT_2PI * np.exp(-0.5 * z * z) / (xs * p.sigma * p.mass)
    return _out(np.where(inside, dens, 0.0), x)


def trunc_lognormal_cdf(x, p: TruncLognormalParams):
    xa = np.asarray(x, dtype=float)
    xs = np.clip(xa, p.a_low, p.a_up)
    z = (np.log(xs) - p.mu) / p.sigma
    if p.z_low > 0:
        below = ndtr(-p.z_low) - ndtr(-z)    # upper-tail window: difference of survivals
    else:
        below = ndtr(z) - ndtr(p.z_low)
    return _out(np.clip(below / p.mass, 0.0, 1.0), x)


def trunc_lognormal_sample(rng, p: TruncLognormalParams, size=None):
    """Inverse-CDF draw through the underlying truncated normal (bytes)."""
    u = rng.random(size)
    if p.z_low > 0:
        # window in the upper tail: invert the survival function instead
        q_lo = ndtr(-p.z_low)
        z = -ndtri(q_lo - u * (q_lo - ndtr(-p.z_up)))
    else:
        z = ndtri(ndtr(p.z_low) + u * p.mass)
    x = np.clip(np.exp(p.mu + p.sigma * z), p.a_low, p.a_up)
    return _out(x, u)


# -- exponential ------------------------------------------------------------

def exponential_pdf(t, p: ExponentialParams):
    """``exp(-t/m)/m`` for ``t >= 0``; negative ``t`` has density 0."""
    ta = np.asarray(t, dtype=float)
    dens = np.exp(-np.maximum(ta, 0.0) / p.mean_iat) / p.mean_iat
    return _out(np.where(ta >= 0, dens, 0.0), t)


def exponential_cdf(t, p: ExponentialParams):
    ta = np.asarray(t, dtype=float)
    return _out(np.where(ta > 0, -np.expm1(-np.maximum(ta, 0.0) / p.mean_iat), 0.0), t)


def exponential_sample(rng, p: ExponentialParams, size=None):
    u = rng.random(size)
    return _out(-p.mean_iat * np.log(u), u)


# -- Erlang -----------------------------------------------------------------

def erlang_pdf(t, p: ErlangParams):
    ta = np.asarray(t, dtype=float)
    n, lam = p.shape_n, p.rate_lambda
    ts = np.where(ta > 0, ta, 1.0)
    dens = np.exp(n * math.log(lam) + (n - 1) * np.log(ts) - lam * ts - gammaln(n))
    at_zero = lam if n == 1 else 0.0
    dens = np.where(ta > 0, dens, np.where(ta == 0, at_zero, 0.0))
    return _out(dens, t)


def erlang_cdf(t, p: ErlangParams):
    ta = np.asarray(t, dtype=float)
    return _out(gammainc(p.shape_n, p.rate_lambda * np.maximum(ta, 0.0)), t)


def erlang_mean(p: ErlangParams):
    return p.shape_n / p.rate_lambda


def erlang_sample(rng, p: ErlangParams, size=None):
    """Sum of ``shape_n`` independent exponential(1/lambda) draws."""
    n = int(p.shape_n)
    shape = (n,) if size is None else (*np.atleast_1d(size), n)
    u = rng.random(shape)
    s = -np.log(u).sum(axis=-1) / p.rate_lambda
    return float(s) if size is None else s


# -- truncated Pareto -------------------------------------------------------

def trunc_pareto_pdf(x, p: TruncParetoParams):
    xa = np.asarray(x, dtype=float)
    inside = (xa >= p.a_low) & (xa <= p.a_up)
    xs = np.where(inside, xa, p.a_low)
    dens = p.alpha * (p.a_low / xs) ** p.alpha / (xs * p.span)
    return _out(np.where(inside, dens, 0.0), x)


def trunc_pareto_cdf(x, p: TruncParetoParams):
    xa = np.asarray(x, dtype=float)
    xs = np.clip(xa, p.a_low, p.a_up)
    return _out(-np.expm1(p.alpha * np.log(p.a_low / xs)) / p.span, x)


def trunc_pareto_sample(rng, p: TruncParetoParams, size=None):
    u = rng.random(size)
    x = np.clip(p.a_low * (1.0 - u * p.span) ** (-1.0 / p.alpha), p.a_low, p.a_up)
    return _out(x, u)


def trunc_pareto_moment(p: TruncParetoParams, k):
    """``E[X**k]`` for any real ``k`` (negative ``k`` gives inverse moments).

    When ``k == alpha`` the power-law integral turns logarithmic.
    """
    ratio = p.a_up / p.a_low
    if k == p.alpha:
        integral = math.log(ratio)
    else:
        integral = math.expm1((k - p.alpha) * math.log(ratio)) / (k - p.alpha)
    return p.a_low ** k * p.alpha * integral / p.span


def trunc_pareto_mean(p: TruncParetoParams):
    """Closed-form mean; at ``alpha == 1`` this is ``a_low*ln(a_up/a_low)/span``."""
    return trunc_pareto_moment(p, 1.0)
