"""Compare the compiled and numpy kernel backends on the Monte Carlo hot paths.

    python benchmarks/bench_kernels.py [--runs N] [--repeat K]
"""

import argparse
import time

import numpy as np

from traffic5g import kernels
from traffic5g.mixture import ScenarioConfig


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20_000, help="aggregate runs of 40 users")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    cfg = ScenarioConfig()
    fp, ip = cfg.packed()
    n_users = args.runs * cfg.n_ue
    cases = {
        "uniforms": lambda be: be.uniforms(cfg.seed, 0, 0, n_users * cfg.slot),
        "user_rates": lambda be: be.user_rates(cfg.seed, 0, 0, n_users, fp, ip)[0],
        "aggregate": lambda be: be.aggregate(cfg.seed, 0, args.runs, cfg.n_ue, fp, ip),
    }
    backends = kernels.available_backends()
    print(f"active backend: {kernels.BACKEND}; {args.runs} runs x {cfg.n_ue} users, "
          f"best of {args.repeat}")
    print(f"{'case':12s} " + " ".join(f"{name:>12s}" for name in backends) + "     speedup")
    for case, fn in cases.items():
        results = {name: _best(lambda: fn(be), args.repeat) for name, be in backends.items()}
        row = " ".join(f"{results[n][0]:11.3f}s" for n in backends)
        speed = ""
        if "compiled" in results:
            ref, got = results["python"][1], results["compiled"][1]
            np.testing.assert_allclose(got, ref, rtol=1e-12)
            speed = f"{results['python'][0] / results['compiled'][0]:10.1f}x"
        print(f"{case:12s} {row} {speed}")


if __name__ == "__main__":
    main()
