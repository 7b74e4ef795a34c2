"""Independent numerical checks for the closed-form rate laws.

Ratio-distribution quadrature, quantile-grid convolution, KS distance,
normalization and moment checks, and the :func:`run_validation` suite used
by the ``validate`` command.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

from .distributions import (
    ErlangParams, ExponentialParams, TruncLognormalParams, TruncParetoParams,
    erlang_cdf, erlang_pdf, exponential_cdf, exponential_pdf, trunc_lognormal_cdf,
    trunc_lognormal_pdf, trunc_pareto_cdf, trunc_pareto_pdf,
)
from .rate_models import (
    BITS_PER_BYTE, AnalyticPdf, batch_rate_cdf, batch_rate_law, batch_rate_mean,
    batch_rate_sample, uhd_rate_law, uhd_rate_sample, web_log_rate_sample,
    web_rate_law, web_rate_sample, web_ratio_law,
)
from .rng import RngStream

PDF_REL_TOL = 1e-6
NORM_TOL = 1e-4
KS_FLOOR = 0.01
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-8


class DivergentMomentError(ArithmeticError):
    """The requested moment does not exist for this law."""


class UnsupportedSizeError(ValueError):
    pass


def ks_threshold(n):
    """KS acceptance level: the 0.01 floor, relaxed to 1.36/sqrt(n) for small n."""
    return max(KS_FLOOR, 1.36 / math.sqrt(n))


# -- constituent laws -------------------------------------------------------

def lognormal_law(p: TruncLognormalParams, scale=1.0):
    """Truncated lognormal of ``scale * X`` (``scale=8`` turns bytes into bits)."""
    bps = tuple(scale * math.exp(p.mu + k * p.sigma) for k in range(-4, 5))
    return AnalyticPdf(
        density=lambda x: trunc_lognormal_pdf(x / scale, p) / scale,
        support_lo=scale * p.a_low, support_hi=scale * p.a_up,
        cdf=lambda x: trunc_lognormal_cdf(x / scale, p),
        breakpoints=tuple(b for b in bps if scale * p.a_low < b < scale * p.a_up))


def log_packet_law(p: TruncLognormalParams):
    """Law of ``ln X``: a normal truncated to ``[ln a_low, ln a_up]``."""
    lo, hi = math.log(p.a_low), math.log(p.a_up)
    norm = math.sqrt(2.0 * math.pi) * p.sigma * p.mass

    def density(y):
        z = (np.asarray(y, dtype=float) - p.mu) / p.sigma
        return np.exp(-0.5 * z * z) / norm

    bps = tuple(p.mu + k * p.sigma for k in range(-4, 5))
    return AnalyticPdf(density=density, support_lo=lo, support_hi=hi,
                       cdf=lambda y: trunc_lognormal_cdf(np.exp(y), p),
                       breakpoints=tuple(b for b in bps if lo < b < hi))


def exponential_law(p: ExponentialParams):
    return AnalyticPdf(density=lambda t: exponential_pdf(t, p), support_lo=0.0,
                       cdf=lambda t: exponential_cdf(t, p),
                       breakpoints=tuple(p.mean_iat * k for k in (0.1, 1.0, 10.0)))


def erlang_law(p: ErlangParams):
    m = p.shape_n / p.rate_lambda
    return AnalyticPdf(density=lambda t: erlang_pdf(t, p), support_lo=0.0,
                       cdf=lambda t: erlang_cdf(t, p), breakpoints=(0.5 * m, m, 2.0 * m))


def pareto_law(p: TruncParetoParams):
    return AnalyticPdf(density=lambda x: trunc_pareto_pdf(x, p), support_lo=p.a_low,
                       support_hi=p.a_up, cdf=lambda x: trunc_pareto_cdf(x, p))


def uniform_law(lo, hi):
    w = hi - lo
    return AnalyticPdf(density=lambda x: np.full(np.shape(x), 1.0 / w), support_lo=lo,
                       support_hi=hi,
                       cdf=lambda x: np.clip((np.asarray(x, dtype=float) - lo) / w, 0.0, 1.0))


# -- quadrature -------------------------------------------------------------

def _quad_pieces(fn, lo, hi, points=(), epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL):
    """Adaptive quadrature of ``fn`` over ``[lo, hi]`` split at ``points``."""
    if not lo < hi:
        return 0.0
    inner = sorted(p for p in set(points) if lo < p < hi and math.isfinite(p))
    edges = [lo, *inner, hi]
    total = []
    for a, b in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            # slow r^-2 tails trip QUADPACK's heuristic; accuracy is judged by callers
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(lambda x: float(fn(x)), a, b, epsabs=epsabs,
                                    epsrel=epsrel, limit=200)
        total.append(val)
    return math.fsum(total)


def ratio_pdf_quadrature(num_pdf: AnalyticPdf, den_pdf: AnalyticPdf, r,
                         epsabs=0.0, epsrel=1e-10):
    """Density of ``N / D`` at ``r``: ``integral t * f_N(r t) * f_D(t) dt``.

    The integral runs over the denominator support intersected with
    ``num_lo / r <= t <= num_hi / r``, split at both laws' breakpoints. A
    point-mass denominator reduces to ``t0 * f_N(r t0)``. The default pure
    relative tolerance suits densities measured per bit/s, which are far
    below any sensible absolute tolerance.
    """
    if np.ndim(r) > 0:
        return np.array([ratio_pdf_quadrature(num_pdf, den_pdf, x, epsabs, epsrel)
                         for x in np.asarray(r, dtype=float).ravel()]).reshape(np.shape(r))
    r = float(r)
    if num_pdf.atom is not None:
        raise ValueError("numerator must have a density")
    if not r > 0:
        return 0.0
    if den_pdf.atom is not None:
        t0 = den_pdf.atom
        return t0 * num_pdf(r * t0) if t0 > 0 else 0.0
    lo = max(den_pdf.support_lo, num_pdf.support_lo / r, 0.0)
    hi = min(den_pdf.support_hi, num_pdf.support_hi / r)
    if not lo < hi:
        return 0.0
    points = list(den_pdf.breakpoints) + [b / r for b in num_pdf.breakpoints]

    def integrand(t):
        return t * num_pdf(r * t) * den_pdf(t)

    return _quad_pieces(integrand, lo, hi, points, epsabs=epsabs, epsrel=epsrel)


def cdf_derivative(cdf, r, rel_step=1e-4, sf=None):
    """Five-point central difference of ``cdf`` at ``r`` with step ``rel_step * r``.

    When ``sf`` (the survival function) is given it is differentiated instead
    wherever ``cdf(r) > 1/2``, avoiding cancellation in the upper tail.
    """
    ra = np.asarray(r, dtype=float)
    h = rel_step * np.abs(ra)

    def stencil(fn):
        return (fn(ra - 2 * h) - 8 * fn(ra - h) + 8 * fn(ra + h) - fn(ra + 2 * h)) / (12 * h)

    d = stencil(cdf)
    if sf is not None:
        upper = np.asarray(cdf(ra)) > 0.5
        if np.any(upper):
            d = np.where(upper, -stencil(sf), d)
    return float(d) if np.ndim(r) == 0 else d


def quantile(law: AnalyticPdf, q, iters=200):
    """Invert ``law.cdf`` by bisection (geometric on positive supports)."""
    qa = np.atleast_1d(np.asarray(q, dtype=float))
    if law.atom is not None:
        return _like(np.full(qa.shape, law.atom), q)
    cdf = law.cdf
    positive = law.support_lo >= 0
    seeds = [b for b in law.breakpoints if b > 0] or [1.0]
    a = np.full(qa.shape, law.support_lo if law.support_lo > 0 else min(seeds))
    b = np.full(qa.shape, law.support_hi if math.isfinite(law.support_hi) else max(seeds))
    if not positive:
        a = np.full(qa.shape, law.support_lo if math.isfinite(law.support_lo) else -1.0)
    for _ in range(2000):
        low = cdf(a) > qa
        if not low.any():
            break
        a = np.where(low, a / 2.0 if positive else a - 2.0 * np.abs(a) - 1.0, a)
    for _ in range(2000):
        high = cdf(b) < qa
        if not high.any():
            break
        b = np.where(high, b * 2.0 if positive else b + 2.0 * np.abs(b) + 1.0, b)
    for _ in range(iters):
        m = np.sqrt(a * b) if positive and np.all(a > 0) else 0.5 * (a + b)
        go_right = cdf(m) < qa
        a = np.where(go_right, m, a)
        b = np.where(go_right, b, m)
        if np.all(b - a <= 4e-16 * np.maximum(np.abs(b), 1e-300)):
            break
    return _like(0.5 * (a + b), q)


def _like(values, like):
    return float(values[0]) if np.ndim(like) == 0 else values.reshape(np.shape(like))


def cdf_from_pdf(law: AnalyticPdf, n_cells=4000, nodes=8):
    """CDF obtained by integrating ``law``'s density, ignoring ``law.cdf``.

    Cumulative Gauss-Legendre sums on a log grid spanning the law's
    breakpoints (or finite support) give exact-derivative knots for a cubic
    Hermite interpolant. Mass below the grid is added by adaptive quadrature.
    The result is not renormalized, so a mis-scaled density shows through.
    """
    pts = [b for b in law.breakpoints if b > 0]
    lo = law.support_lo if law.support_lo > 0 else min(pts) / 1e3
    hi = law.support_hi if math.isfinite(law.support_hi) else max(pts) * 1e3
    grid = np.geomspace(lo, hi, n_cells + 1)
    x, w = np.polynomial.legendre.leggauss(nodes)
    logs = np.log(grid)
    half = 0.5 * np.diff(logs)
    u = 0.5 * (logs[1:] + logs[:-1])[:, None] + half[:, None] * x
    rr = np.exp(u)
    cell = (law(rr.ravel()).reshape(rr.shape) * rr * w).sum(axis=1) * half
    head = _quad_pieces(law, law.support_lo, lo) if law.support_lo < lo else 0.0
    knots = head + np.concatenate(([0.0], np.cumsum(cell)))
    spline = CubicHermiteSpline(grid, knots, law(grid), extrapolate=False)

    def cdf(r):
        ra = np.asarray(r, dtype=float)
        out = spline(np.clip(ra, lo, hi))
        out = np.where(ra < lo, head, out)  # below the grid: bounded by the head mass
        out = np.where(ra < law.support_lo, 0.0, out)
        out = np.where(ra > hi, knots[-1], out)
        return float(out) if np.ndim(r) == 0 else out

    return cdf


def tabulate_law(law: AnalyticPdf, n=100_000, q_lo=1e-10, q_hi=1.0 - 1e-10):
    """Interpolated copy of ``law`` on a log grid between two quantiles.

    Speeds up repeated CDF/density evaluation of laws that are costly to
    evaluate; CDF is 0 below and 1 above the table.
    """
    lo, hi = quantile(law, [q_lo, q_hi])
    grid = np.geomspace(lo, hi, n)
    lg = np.log(grid)
    dens, cdfv = law(grid), law.cdf(grid)

    def density(r):
        return np.interp(np.log(r), lg, dens, left=0.0, right=0.0)

    def cdf(r):
        ra = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return np.interp(np.log(np.maximum(ra, 1e-300)), lg, cdfv, left=0.0, right=1.0)

    bps = tuple(b for b in law.breakpoints if lo < b < hi)
    return AnalyticPdf(density=density, support_lo=lo, support_hi=hi, cdf=cdf,
                       breakpoints=bps, tail_index=None)


# -- convolution ------------------------------------------------------------

def _atoms(law, m):
    """``m`` equal-mass atoms at the mid-mass quantiles of ``law``."""
    if law.atom is not None:
        return np.full(m, law.atom)
    return quantile(law, (np.arange(m) + 0.5) / m)


def convolve_pdfs_numeric(pdfs, m=2048):
    """Law of the sum of 2 or 3 independent variables with the given laws.

    One input stays continuous while the others are replaced by ``m``
    equal-mass atoms at their mid-mass quantiles (pairwise atom sums are
    re-quantized back to ``m`` atoms); this turns the convolution integral
    into an average of shifted copies, whose CDF error is O(1/m) even when
    the inputs live on very different scales. The estimate is averaged over
    which input stays continuous, which makes it symmetric in its inputs.
    Point masses act as shifts.
    """
    pdfs = list(pdfs)
    if not 2 <= len(pdfs) <= 3:
        raise UnsupportedSizeError("numeric convolution supports 2 or 3 inputs")
    shift = sum(p.atom for p in pdfs if p.atom is not None)
    cont = [p for p in pdfs if p.atom is None]
    if not cont:
        return AnalyticPdf.point_mass(shift)
    if len(cont) == 1:
        base = cont[0]
        return AnalyticPdf(
            density=lambda s: base(np.asarray(s) - shift),
            support_lo=base.support_lo + shift, support_hi=base.support_hi + shift,
            cdf=lambda s: base.cdf(np.asarray(s) - shift),
            breakpoints=tuple(b + shift for b in base.breakpoints),
            tail_index=base.tail_index)

    atoms = [_atoms(p, m) for p in cont]
    terms = []
    for i, law in enumerate(cont):
        others = [atoms[j] for j in range(len(cont)) if j != i]
        if len(others) == 1:
            pts = others[0]
        else:
            sums = np.sort((others[0][:, None] + others[1][None, :]).ravel())
            pts = sums[np.arange(m) * m + m // 2]
        terms.append((law, np.sort(pts) + shift))

    def average(fn_name, s, chunk=256):
        sa = np.atleast_1d(np.asarray(s, dtype=float))
        flat = sa.ravel()
        out = np.zeros(flat.size)
        for law, pts in terms:
            fn = law if fn_name == "density" else law.cdf
            acc = np.zeros(flat.size)
            for k in range(0, pts.size, chunk):
                acc += np.asarray(fn(flat[:, None] - pts[None, k:k + chunk])).sum(axis=1)
            out += acc / pts.size
        out /= len(terms)
        return float(out[0]) if np.ndim(s) == 0 else out.reshape(sa.shape)

    lo = sum(p.support_lo for p in cont) + shift
    hi = sum(p.support_hi for p in cont) + shift
    medians = [float(np.median(a)) for a in atoms]
    bps = sorted({b + sum(medians) - medians[i] + shift
                  for i, law in enumerate(cont) for b in law.breakpoints})
    tails = [p.tail_index for p in cont if p.tail_index is not None]
    return AnalyticPdf(density=lambda s: average("density", s), support_lo=lo,
                       support_hi=hi, cdf=lambda s: average("cdf", s),
                       breakpoints=tuple(b for b in bps if lo < b < hi),
                       tail_index=min(tails) if tails else None)


# -- goodness of fit and moments --------------------------------------------

def ks_statistic(samples, cdf):
    """Sup-norm distance between the empirical CDF of ``samples`` and ``cdf``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("ks_statistic needs at least one sample")
    if np.any(x[1:] < x[:-1]):
        x = np.sort(x)
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def normalization_check(pdf: AnalyticPdf):
    """``|1 - integral of pdf over its support|``."""
    return abs(1.0 - _quad_pieces(pdf, pdf.support_lo, pdf.support_hi, pdf.breakpoints))


def moment_check(pdf: AnalyticPdf, k):
    """``E[R**k]`` by quadrature.

    Raises
    ------
    DivergentMomentError
        If the declared tail ``pdf ~ r**-a`` makes the moment infinite
        (``k >= a - 1``).
    """
    if pdf.tail_index is not None and k >= pdf.tail_index - 1:
        raise DivergentMomentError(
            f"moment {k} diverges for a density with tail r^-{pdf.tail_index:g}")
    return _quad_pieces(lambda x: x ** k * pdf(x), pdf.support_lo, pdf.support_hi,
                        pdf.breakpoints)


# -- validation suite -------------------------------------------------------

@dataclass
class GofReport:
    """Outcome of every check for one law; ``failures`` names breached checks."""

    name: str
    ks_distance: float = float("nan")
    n_samples: int = 0
    max_abs_pdf_gap: float = float("nan")
    max_rel_pdf_gap: float = float("nan")
    normalization_error: float = float("nan")
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures


def _grid(law, n=100, q=1e-6):
    lo, hi = quantile(law, [q, 1.0 - q])
    return np.geomspace(lo, hi, n)


def _pdf_gap(report, closed, oracle):
    closed, oracle = np.asarray(closed), np.asarray(oracle)
    report.max_abs_pdf_gap = float(np.max(np.abs(closed - oracle)))
    report.max_rel_pdf_gap = float(np.max(np.abs(closed - oracle) / np.abs(oracle)))
    if not report.max_rel_pdf_gap < PDF_REL_TOL:
        report.failures.append(f"{report.name}.oracle")


def _with_density(law, density):
    if density is None:
        return law
    return AnalyticPdf(density=density, support_lo=law.support_lo,
                       support_hi=law.support_hi, cdf=law.cdf,
                       breakpoints=law.breakpoints, tail_index=law.tail_index)


def run_validation(cfg, n_samples=100_000, seed=None, pdf_overrides=None):
    """Run every oracle, normalization and sampler check on ``cfg``'s laws.

    ``pdf_overrides`` maps a law name (``web``, ``web_sampled``, ``cs``,
    ``vr``, ``uhd``) to a replacement density, for fault injection. Returns
    a list of :class:`GofReport`.
    """
    overrides = pdf_overrides or {}
    seed = cfg.seed if seed is None else seed
    ks_tol = ks_threshold(n_samples)
    reports = []

    def finish(rep, law, samples):
        rep.normalization_error = normalization_check(law)
        if not rep.normalization_error < NORM_TOL:
            rep.failures.append(f"{rep.name}.norm")
        if samples is not None:
            rep.n_samples = samples.size
            rep.ks_distance = ks_statistic(np.sort(samples), cdf_from_pdf(law))
            if not rep.ks_distance < ks_tol:
                rep.failures.append(f"{rep.name}.ks")
        reports.append(rep)

    # web, closed form: law of ln(X)/T against the ln-X ratio integral
    rep = GofReport("web")
    law = _with_density(web_rate_law(cfg.web), overrides.get("web"))
    grid = _grid(web_rate_law(cfg.web))
    _pdf_gap(rep, law(grid), ratio_pdf_quadrature(
        log_packet_law(cfg.web.packet), exponential_law(cfg.web.iat), grid))
    try:
        moment_check(law, 1)
        rep.failures.append("web.moment")
    except DivergentMomentError as exc:
        rep.notes.append(f"mean: {exc}")
    finish(rep, law, web_log_rate_sample(RngStream(seed, 0), cfg.web, n_samples))

    # web, sampled: law of 8X/T against the X/T ratio integral
    rep = GofReport("web_sampled")
    law = _with_density(web_ratio_law(cfg.web), overrides.get("web_sampled"))
    grid = _grid(web_ratio_law(cfg.web))
    _pdf_gap(rep, law(grid), ratio_pdf_quadrature(
        lognormal_law(cfg.web.packet, BITS_PER_BYTE), exponential_law(cfg.web.iat), grid))
    finish(rep, law, web_rate_sample(RngStream(seed, 1), cfg.web, n_samples))

    # content sharing and VR: pdf against the derivative of the CDF
    for stream, (name, p) in enumerate((("cs", cfg.cs), ("vr", cfg.vr)), start=2):
        rep = GofReport(name)
        base = batch_rate_law(p)
        law = _with_density(base, overrides.get(name))
        grid = _grid(base)
        erl = ErlangParams(p.batch_n, p.rate_lambda)
        oracle = cdf_derivative(lambda r: batch_rate_cdf(r, p), grid,
                                sf=lambda r: erlang_cdf(p.batch_bits / r, erl))
        _pdf_gap(rep, law(grid), oracle)
        mean = moment_check(law, 1)
        rel = abs(mean / batch_rate_mean(p) - 1.0)
        rep.notes.append(f"mean {mean:.6g} bit/s (closed form rel. gap {rel:.2e})")
        if not rel < 1e-3:
            rep.failures.append(f"{name}.mean")
        finish(rep, law, batch_rate_sample(RngStream(seed, stream), p, n_samples))

    # UHD: corrected closed form against the Pareto ratio integral
    rep = GofReport("uhd")
    base = uhd_rate_law(cfg.uhd)
    law = _with_density(base, overrides.get("uhd"))
    grid = _grid(base)
    _pdf_gap(rep, law(grid), ratio_pdf_quadrature(
        pareto_law(cfg.uhd.packet), pareto_law(cfg.uhd.iat), grid))
    finish(rep, law, uhd_rate_sample(RngStream(seed, 4), cfg.uhd, n_samples))
    return reports
