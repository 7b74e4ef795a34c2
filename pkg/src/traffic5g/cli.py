"""``traffic5g`` command line: plot-ready CSV and JSON run summaries.

Exit status: 0 success, 1 validation failure, 2 configuration error,
3 I/O error.
"""

import argparse
import dataclasses
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .distributions import ParameterError
from .mixture import (
    TRAFFIC_TYPES, WEB_LAWS, ConfigError, EmpiricalDistribution, EngagingRates,
    aggregate_totals, bandwidth_required, component_laws, mixture_law, sample_user_rate,
)
from .oracles import ks_threshold, run_validation
from .rate_models import CODEC_FACTORS, uhd_rate_table
from .rng import RngStream
from .scenario import parse_scenario, scenario_hash

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
REFERENCE_BANDWIDTH_HZ = {"p95": 860e6, "p99": 1.15e9}
REFERENCE_REL_TOL = 0.05
SAMPLE_CHUNK = 1 << 17


class _Failure(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _fmt(x):
    return repr(float(x))


def _csv(header_comments, columns, rows, footer_comments=()):
    buf = io.StringIO()
    for line in header_comments:
        buf.write(f"# {line}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else _fmt(v) for v in row) + "\n")
    for line in footer_comments:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def _emit(args, csv_text, summary=None):
    """Write all outputs in one final step."""
    if args.out is None:
        sys.stdout.write(csv_text)
        if summary is not None:
            sys.stderr.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        return
    out = Path(args.out)
    try:
        out.write_text(csv_text, encoding="utf-8", newline="\n")
        if summary is not None:
            out.with_suffix(".json").write_text(
                json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8",
                newline="\n")
    except OSError as exc:
        raise _Failure(EXIT_IO, f"cannot write output: {exc}") from exc


def _summary(args, cfg, dist, command, wall, extra=None):
    p50, p95, p99 = (dist.percentile(q) for q in (0.50, 0.95, 0.99))
    out = {
        "command": command,
        "scenario_hash": scenario_hash(cfg),
        "seed": cfg.seed,
        "n_runs": dist.samples_count,
        "mean": dist.mean,
        "max": dist.max,
        "p50": p50,
        "p95": p95,
        "p99": p99,
        "spectral_eff": cfg.spectral_eff,
        "bandwidth_p95": bandwidth_required(p95, cfg.spectral_eff),
        "bandwidth_p99": bandwidth_required(p99, cfg.spectral_eff),
        "wall_time": wall if args.timing else None,
        "backend": kernels.BACKEND,
    }
    out.update(extra or {})
    return out


def _histogram_rows(dist, law=None):
    lo, hi, dens = dist.histogram
    if law is None:
        return [(a, b, d) for a, b, d in zip(lo, hi, dens)]
    edges = dist.bin_edges
    mass = np.diff(np.asarray(law.cdf(edges), dtype=float))
    analytic = mass / np.diff(edges)
    return [(a, b, f, d) for a, b, f, d in zip(lo, hi, analytic, dens)]


def _draw(sampler, rng, n):
    # fixed-size chunks drawn in order consume the stream exactly like one call
    parts = [sampler(rng, min(SAMPLE_CHUNK, n - i)) for i in range(0, n, SAMPLE_CHUNK)]
    return np.concatenate(parts)


# -- commands ---------------------------------------------------------------

def cmd_pdf(args, cfg):
    # one-hot engaging rates: the same kernel draws a mixture run would make
    weights = [1.0 if t == args.traffic else 0.0 for t in TRAFFIC_TYPES]
    one_hot = dataclasses.replace(cfg, rates=EngagingRates(*weights))
    t0 = time.perf_counter()
    samples = _draw(lambda g, n: sample_user_rate(g, one_hot, n), RngStream(cfg.seed, 0),
                    cfg.n_runs)
    dist = EmpiricalDistribution.from_samples(samples)
    law = component_laws(cfg, args.web_law)[args.traffic]
    wall = time.perf_counter() - t0
    header = [f"traffic={args.traffic} samples={cfg.n_runs} seed={cfg.seed}",
              "rates in bit/s; densities per bit/s; analytic_density is the bin average "
              "of the analytic density"]
    if args.traffic == "web" and args.web_law == "closed_form":
        header.append("web: analytic column is the closed-form law of ln(X_bytes)/T while the "
                      "empirical column samples 8X/T; the two describe different variables "
                      "and are expected to diverge (use --web-law sampled to compare like "
                      "with like)")
    footer = [f"empirical_mean_bps={_fmt(dist.mean)}", f"empirical_max_bps={_fmt(dist.max)}"]
    csv_text = _csv(header, ["bin_lo", "bin_hi", "analytic_density", "empirical_density"],
                    _histogram_rows(dist, law), footer)
    _emit(args, csv_text, _summary(args, cfg, dist, f"pdf {args.traffic}", wall,
                                   {"web_law": args.web_law}))
    return EXIT_OK


def cmd_mixture(args, cfg):
    t0 = time.perf_counter()
    rng = RngStream(cfg.seed, 0)
    samples = _draw(lambda g, n: sample_user_rate(g, cfg, n), rng, cfg.n_runs)
    dist = EmpiricalDistribution.from_samples(samples)
    law = mixture_law(cfg, args.web_law)
    wall = time.perf_counter() - t0
    header = [f"single-user mixture samples={cfg.n_runs} seed={cfg.seed} "
              f"web_law={args.web_law}",
              "rates in bit/s; densities per bit/s"]
    footer = [f"empirical_mean_bps={_fmt(dist.mean)}", f"empirical_max_bps={_fmt(dist.max)}"]
    csv_text = _csv(header, ["bin_lo", "bin_hi", "analytic_density", "empirical_density"],
                    _histogram_rows(dist, law), footer)
    _emit(args, csv_text, _summary(args, cfg, dist, "mixture", wall, {"web_law": args.web_law}))
    return EXIT_OK


def _aggregate(args, cfg):
    t0 = time.perf_counter()
    dist = EmpiricalDistribution.from_samples(aggregate_totals(cfg, args.workers))
    return dist, time.perf_counter() - t0


def cmd_aggregate(args, cfg):
    dist, wall = _aggregate(args, cfg)
    lo, hi, dens = dist.histogram
    cdf = dist.cdf(hi)
    header = [f"aggregate of n_ue={cfg.n_ue} users, runs={cfg.n_runs} seed={cfg.seed}",
              "rates in bit/s; density per bit/s; cdf evaluated at bin_hi"]
    csv_text = _csv(header, ["bin_lo", "bin_hi", "density", "cdf"],
                    zip(lo, hi, dens, cdf))
    _emit(args, csv_text, _summary(args, cfg, dist, "aggregate", wall, {"n_ue": cfg.n_ue}))
    return EXIT_OK


def reference_comparison(summary):
    """Relative gap of computed p95/p99 bandwidths to the published reference."""
    out = {}
    for key, ref in REFERENCE_BANDWIDTH_HZ.items():
        val = summary[f"bandwidth_{key}"]
        out[key] = {"computed_hz": val, "reference_hz": ref, "rel_diff": val / ref - 1.0}
    return out


def cmd_bandwidth(args, cfg):
    dist, wall = _aggregate(args, cfg)
    lo, hi, dens = dist.histogram
    s = cfg.spectral_eff
    rows = zip(bandwidth_required(lo, s), bandwidth_required(hi, s), dens * s, dist.cdf(hi))
    summary = _summary(args, cfg, dist, "bandwidth", wall, {"n_ue": cfg.n_ue})
    comparison = reference_comparison(summary)
    summary["reference_comparison"] = comparison
    notes = []
    for key, c in comparison.items():
        if abs(c["rel_diff"]) > REFERENCE_REL_TOL:
            notes.append(f"note: computed bandwidth_{key} {c['computed_hz'] / 1e6:.1f} MHz "
                         f"differs from the reference {c['reference_hz'] / 1e6:.0f} MHz "
                         f"by {100 * c['rel_diff']:+.1f}%")
    header = [f"bandwidth for n_ue={cfg.n_ue} users, runs={cfg.n_runs} seed={cfg.seed} "
              f"spectral_eff={_fmt(s)} bit/s/Hz",
              "bandwidth in Hz; density per Hz; cdf evaluated at bandwidth_hi", *notes]
    csv_text = _csv(header, ["bandwidth_lo", "bandwidth_hi", "density", "cdf"], rows)
    _emit(args, csv_text, summary)
    for line in notes:
        print(line, file=sys.stderr)
    return EXIT_OK


def cmd_uhd_table(args, cfg):
    factor = CODEC_FACTORS[args.codec]
    rows = [(row.fmt.resolution_name, str(row.fmt.width), str(row.fmt.height),
             str(row.fmt.bpp), _fmt(row.fmt.frame_rate), args.codec, _fmt(factor),
             _fmt(row.rate_bps), "yes" if row.supported else "no")
            for row in uhd_rate_table(factor)]
    header = [f"codec={args.codec} factor={_fmt(factor)}; supported = rate <= 20 Gbps"]
    cols = ["resolution", "width", "height", "bpp", "frame_rate", "codec", "codec_factor",
            "rate_bps", "supported"]
    _emit(args, _csv(header, cols, rows))
    return EXIT_OK


def cmd_validate(args, cfg):
    reports = run_validation(cfg, n_samples=args.n_samples)
    tol = ks_threshold(args.n_samples)
    lines = [f"KS threshold {tol:.4g} at n={args.n_samples}"]
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL " + ",".join(rep.failures)
        lines.append(f"{rep.name:12s} ks={rep.ks_distance:.4g} rel_pdf_gap={rep.max_rel_pdf_gap:.3g} "
                     f"norm_err={rep.normalization_error:.3g} {status}")
        lines.extend(f"{'':12s} {n}" for n in rep.notes)
    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        payload = [dict(dataclasses.asdict(r), passed=r.passed) for r in reports]
        payload = json.loads(json.dumps(payload, default=float).replace("NaN", "null"))
        try:
            Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
        except OSError as exc:
            raise _Failure(EXIT_IO, f"cannot write output: {exc}") from exc
        sys.stdout.write(text)
    failed = [f for r in reports for f in r.failures]
    if failed:
        print("validation failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


# -- argument parsing -------------------------------------------------------

def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _common(suppress):
    p = argparse.ArgumentParser(add_help=False)
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--config", metavar="PATH", help="scenario TOML file", **kw)
    p.add_argument("--seed", type=_u64, help="override the scenario seed", **kw)
    p.add_argument("--runs", type=_positive_int, metavar="N",
                   help="Monte Carlo samples/runs (default from scenario, 10^6)", **kw)
    p.add_argument("--out", metavar="PATH",
                   help="CSV output path; the JSON summary goes next to it (.json)", **kw)
    p.add_argument("--workers", type=_positive_int, metavar="N",
                   help="threads for aggregate runs (results do not depend on it)", **kw)
    p.add_argument("--timing", action="store_true",
                   help="record wall time in the summary (makes it non-reproducible)", **kw)
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog="traffic5g", parents=[_common(False)],
        description="Instantaneous data-rate models for a mm-wave hotspot cell.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.set_defaults(config=None, seed=None, runs=None, out=None, workers=1, timing=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common(True)

    p = sub.add_parser("pdf", parents=[common], help="analytic vs Monte Carlo pdf of one type")
    p.add_argument("traffic", choices=TRAFFIC_TYPES)
    p.add_argument("--web-law", choices=WEB_LAWS, default="closed_form")
    p.set_defaults(func=cmd_pdf)

    p = sub.add_parser("mixture", parents=[common], help="single-user mixture pdf")
    p.add_argument("--web-law", choices=WEB_LAWS, default="closed_form")
    p.set_defaults(func=cmd_mixture)

    p = sub.add_parser("aggregate", parents=[common], help="aggregate cell rate pdf/CDF")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("bandwidth", parents=[common], help="required bandwidth pdf/CDF")
    p.set_defaults(func=cmd_bandwidth)

    p = sub.add_parser("uhd-table", parents=[common], help="UHD average-rate table")
    p.add_argument("--codec", choices=tuple(CODEC_FACTORS), default="uncoded")
    p.set_defaults(func=cmd_uhd_table)

    p = sub.add_parser("validate", parents=[common], help="run every oracle check")
    p.add_argument("--n-samples", type=_positive_int, default=100_000)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_scenario(args.config)
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.runs is not None:
            changes["n_runs"] = args.runs
        if changes:
            cfg = dataclasses.replace(cfg, **changes)
        return args.func(args, cfg)
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
