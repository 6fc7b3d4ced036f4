#!/usr/bin/env python3
"""Compare the compiled trial kernel against the pure-Python fallback.

Both backends draw from the same counter-based RNG, so their tallies must
agree bit for bit; this script asserts that before timing anything.

Usage:
    python benchmarks/benchmark_mc.py [--trials N] [--seed S] [--threads T]
"""

import argparse
import sys
import time

from dpsmdi.montecarlo import (
    COMPILED_AVAILABLE,
    ChannelParams,
    available_backends,
    run_trials,
)

SCENARIOS = [
    ("ideal", ChannelParams(eta_a=1.0, eta_b=1.0, p_dark=0.0, e_d=0.0)),
    ("lossy", ChannelParams(eta_a=0.1, eta_b=0.1, p_dark=3e-6, e_d=0.015)),
    ("long-haul", ChannelParams.from_total_distance(200.0)),
]


def time_backend(backend, params, n_trials, seed, threads):
    started = time.perf_counter()
    estimates = run_trials(params, n_trials, seed, threads=threads, backend=backend)
    return estimates, time.perf_counter() - started


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=2_000_000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    if not COMPILED_AVAILABLE:
        print("compiled kernel not built; timing the fallback only")

    header = f"{'scenario':<10} {'backend':<9} {'trials':>10} {'seconds':>8} {'Mtrials/s':>10}"
    print(header)
    print("-" * len(header))
    for name, params in SCENARIOS:
        results = {}
        for backend in backends:
            estimates, elapsed = time_backend(
                backend, params, args.trials, args.seed, args.threads
            )
            results[backend] = (estimates, elapsed)
            rate = args.trials / elapsed / 1e6
            print(f"{name:<10} {backend:<9} {args.trials:>10} {elapsed:>8.3f} {rate:>10.1f}")

        if len(results) == 2:
            compiled, fallback = results["compiled"][0], results["python"][0]
            assert (compiled.mask_counts == fallback.mask_counts).all(), name
            assert compiled.keep_count == fallback.keep_count, name
            assert compiled.error_count == fallback.error_count, name
            speedup = results["python"][1] / results["compiled"][1]
            print(f"{name:<10} tallies identical, compiled speedup {speedup:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
