"""Compare the compiled Euler kernel against the pure-numpy fallback.

Runs the same coupled ensemble on both backends, checks they agree,
and reports path-steps per second.  Usage:

    python benchmarks/bench_kernels.py [--paths N] [--steps N] [--repeat K]
"""

import argparse
import time

import numpy as np

from itersde import (Brownian, Composite, DriftOnly, LevyDriverSpec, TimeGrid,
                     available_backends, coupled_ensemble, field_from_text)


def run(backend: str, n_paths: int, n_steps: int):
    phi = field_from_text("[[cos(x1), clamp(x1, -3, 3)]]", in_dim=1)
    psi = field_from_text("[[sin(y1), clamp(2*y1, -4, 4)], [0, 1]]", in_dim=2)
    drv = LevyDriverSpec(Composite((LevyDriverSpec(Brownian(1.0), time_scale=10.0),
                                    LevyDriverSpec(DriftOnly(1.0)))))
    grid = TimeGrid(0.0, 1.0, n_steps)
    t0 = time.perf_counter()
    ens = coupled_ensemble(phi, psi, drv, [0.0], [0.0, 0.0], grid, n_paths,
                           master_seed=123, snapshots=[n_steps], backend=backend)
    return time.perf_counter() - t0, ens.values[:, -1, :]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=512)
    ap.add_argument("--steps", type=int, default=8192)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = available_backends()
    print(f"available backends: {backends}")
    work = args.paths * args.steps
    results = {}
    finals = {}
    for b in backends:
        best = float("inf")
        for _ in range(args.repeat):
            dt, final = run(b, args.paths, args.steps)
            best = min(best, dt)
        results[b] = best
        finals[b] = final
        print(f"{b:>9}: {best:8.3f} s  ({work / best / 1e6:7.2f} M path-steps/s)")
    if len(backends) == 2:
        gap = np.max(np.abs(finals["compiled"] - finals["python"]))
        scale = 1.0 + np.max(np.abs(finals["python"]))
        print(f"  speedup: {results['python'] / results['compiled']:.1f}x"
              f"   final-state gap: {gap / scale:.2e} (rel)")


if __name__ == "__main__":
    main()
