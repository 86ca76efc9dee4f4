"""Compare the compiled shell quadrature against the numpy fallback.

    python3 benchmarks/bench_shell.py [--counts 129 257] [--repeat 3] [--threads 1]

Prints best-of-``repeat`` wall time per backend, the speedup, and the
largest difference between the two results relative to max|ψ_out|.
"""
import argparse
import time

import numpy as np

from kerrchain import _backend
from kerrchain.kernels import KernelSpec, KernelVariant
from kerrchain.params import ChainSpec, SiteParams, default_grid
from kerrchain.wavepacket import PulseShape, connected_part, make_separable_jsa

S, T = SiteParams(1.0, 0.0, 1.0), SiteParams(1.2, 0.1, 2.0)
CASES = {
    "single_site": KernelSpec(KernelVariant.SINGLE_SITE, ChainSpec((S,))),
    "two_site_co": KernelSpec(KernelVariant.TWO_SITE_CO, ChainSpec((S, T), "co")),
    "two_site_counter": KernelSpec(KernelVariant.TWO_SITE_COUNTER, ChainSpec((S, T))),
    "nsite_counter(12)": KernelSpec(KernelVariant.NSITE_COUNTER, ChainSpec.uniform(S, 12)),
}


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--counts", type=int, nargs="+", default=[129, 257])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    if not _backend.HAVE_COMPILED:
        raise SystemExit("compiled core not built; reinstall without KERRCHAIN_NO_EXT")
    p = PulseShape.gaussian(0.0, 0.2)
    print(f"{'kernel':<18} {'M':>5} {'numpy s':>9} {'compiled s':>11} {'speedup':>8} {'max rel diff':>13}")
    for m in args.counts:
        g = default_grid(S, 0.2, m)
        jsa = make_separable_jsa(p, p, g, g)
        for name, k in CASES.items():
            tp, vp = best_time(lambda: connected_part(jsa, k, args.threads, backend="python"), args.repeat)
            tc, vc = best_time(lambda: connected_part(jsa, k, args.threads, backend="compiled"), args.repeat)
            diff = np.abs(vp - vc).max() / np.abs(vp).max()
            print(f"{name:<18} {m:>5} {tp:>9.3f} {tc:>11.3f} {tp / tc:>7.1f}x {diff:>13.1e}")


if __name__ == "__main__":
    main()
