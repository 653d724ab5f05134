"""Compiled vs pure-Python kernel timings.

    python benchmarks/bench_kernels.py [--n N] [--repeat R] [--end-to-end S]

Times each hot loop on both backends with identical inputs, then (with
``--end-to-end``) the in-memory synthesis + down-conversion of an S-second
run under each backend, selected through ``QJFLUOR_PURE_PYTHON`` in a
subprocess since the backend is fixed at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from qjfluor import _fallback

try:
    from qjfluor import _kernels
except ImportError:
    _kernels = None

E2E = """
import time
from qjfluor.kernels import BACKEND
from qjfluor.pipeline import RunConfig, simulate_in_memory
cfg = RunConfig(tau_bright=0.171, tau_dark=0.021, duration={duration})
t = time.perf_counter()
simulate_in_memory(cfg)
print(BACKEND, time.perf_counter() - t)
"""


def cases(n, rng):
    switches = np.cumsum(rng.exponential(0.1, int(n * 1e-5 / 0.1) * 2 + 10))
    switches = switches[switches < n * 4e-6]
    gate = (rng.random(n) < 0.9).astype(np.uint8)
    x = rng.standard_normal(n)
    walk = np.cumsum(rng.standard_normal(n)) * 1e-4
    ratio = 70e3 / 2**18
    return {
        "gate_on_grid": lambda k: k.gate_on_grid(switches, True, 0, 4e-6, n),
        "bright_time_in_bins": lambda k: k.bright_time_in_bins(switches, True, 4e-6, n),
        "single_pole": lambda k: k.single_pole(x, 0.1),
        "hysteresis": lambda k: k.hysteresis(x, -0.5, 0.5, 1),
        "add_gated_tone": lambda k: k.add_gated_tone(np.zeros(n), gate, 12345, ratio, 0.3, 1.0, walk),
        "mix_boxcar": lambda k: k.mix_boxcar(x, 12345, ratio, 46),
    }


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2**20, help="samples per kernel call")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", type=float, default=0.0, metavar="S",
                    help="also time an S-second synthesis run under each backend")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    print(f"{'kernel':<22} {'python [ms]':>12} {'compiled [ms]':>14} {'speed-up':>9}")
    for name, call in cases(args.n, rng).items():
        tp = best(lambda: call(_fallback), args.repeat) * 1e3
        if _kernels is None:
            print(f"{name:<22} {tp:12.2f} {'n/a':>14} {'':>9}")
            continue
        tc = best(lambda: call(_kernels), args.repeat) * 1e3
        print(f"{name:<22} {tp:12.2f} {tc:14.2f} {tp / tc:8.1f}x")

    if args.end_to_end > 0:
        print(f"\nend to end ({args.end_to_end:g} s record, synthesis + down-conversion):")
        for pure in ("1", "0"):
            env = dict(os.environ, QJFLUOR_PURE_PYTHON=pure)
            out = subprocess.run([sys.executable, "-c", E2E.format(duration=args.end_to_end)],
                                 env=env, capture_output=True, text=True, check=True).stdout.split()
            print(f"  {out[0]:<9} {float(out[1]):8.2f} s")


if __name__ == "__main__":
    main()
