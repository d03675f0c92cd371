"""Time the per-trial hot path (covariance, eigenvalues, statistics) on each backend.

    python benchmarks/bench_backends.py --n 16 64 128 256 --snapshots 200 --trials 256
"""

import argparse
import time

import numpy as np

from eigendetect._backend import available_backends, get_backend
from eigendetect.array_signal import ArrayConfig, ScenarioConfig, synth_batch


def best_time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[16, 64, 128, 256])
    ap.add_argument("--snapshots", type=int, default=200)
    ap.add_argument("--trials", type=int, default=256)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    backends = {name: get_backend(name) for name in available_backends()}
    scenario = ScenarioConfig(-18.0, np.pi / 6, args.snapshots)
    print(f"L={args.snapshots} trials={args.trials} backends={list(backends)}")
    print(f"{'N':>5} " + " ".join(f"{name + ' ms/trial':>18}" for name in backends)
          + f" {'speedup':>8} {'max rel diff':>13}")
    for n in args.n:
        y = synth_batch(scenario, ArrayConfig(n), 1, range(args.trials))
        times, stats = {}, {}
        for name, be in backends.items():
            def work(be=be):
                values, _ = be.batch_spectra(y)
                return be.batch_statistics(values)

            stats[name] = work()
            times[name] = best_time(work, args.repeats) / args.trials * 1e3
        row = f"{n:>5} " + " ".join(f"{times[name]:>18.4f}" for name in backends)
        if len(backends) == 2:
            a, b = stats["compiled"], stats["python"]
            ok = np.isfinite(a) & np.isfinite(b)
            diff = np.max(np.abs(a[ok] - b[ok]) / np.abs(b[ok]))
            row += f" {times['python'] / times['compiled']:>8.2f} {diff:>13.1e}"
        print(row)


if __name__ == "__main__":
    main()
