#!/usr/bin/env python3
"""
Benchmark the JIT-compiled kernels against their pure-Python sources.

Every hot kernel ships as a single function that numba compiles at import
time; E2EQOS_DISABLE_NUMBA=1 runs the same statements uncompiled. This script
times both paths per kernel (in process) and end to end (one optimizer run
per path, in subprocesses so each picks its path at import).

Usage:
    python3 benchmarks/benchmark_kernels.py
    python3 benchmarks/benchmark_kernels.py --repeats 20000 --iterations 500
    python3 benchmarks/benchmark_kernels.py --output results.json --skip-e2e
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from e2eqos import kernels


def make_inputs(seed=0):
    """Representative call arguments for each kernel at case-study sizes."""
    gen = np.random.default_rng(seed)
    routing = np.concatenate([gen.dirichlet(np.ones(2)), gen.dirichlet(np.ones(2))])
    y_an = np.concatenate([routing, gen.uniform(20.0, 300.0, 2)])
    flows = np.array([40.0, 20.0])
    upsilon = np.array([1.0, 0.8])
    kappa = np.array([4.0, 5.0])
    beta = np.array([40.0, 10.0])
    b_cn = gen.uniform(20.0, 300.0, 2)
    budgets = np.array([0.7, 0.5])
    lo, hi = np.full(6, 0.0), np.full(6, 560.0)
    w = np.array([[0.75, 0.125, 0.125], [0.125, 0.875, 0.0], [0.125, 0.0, 0.875]])
    e = gen.normal(size=(3, 4))
    g_new = gen.normal(size=(3, 4))
    g_old = gen.normal(size=(3, 4))
    return {
        "simplex_project": (gen.normal(size=4), 1.0),
        "box_project": (gen.normal(size=6) * 100, lo, hi),
        "mix_estimates": (w, e, g_new, g_old),
        "an_cost": (y_an, flows, upsilon, kappa, beta, 2.5, 1.1),
        "an_cost_grad": (y_an, flows, upsilon, kappa, beta, 2.5, 1.1),
        "an_contrib": (y_an, flows, upsilon, 2.5, budgets),
        "an_contrib_jac": (y_an, flows, upsilon, 2.5),
        "cn_cost": (b_cn, np.array([90.0, 50.0]), np.array([4.0, 6.0]), beta, 2.5, 1.1),
        "cn_cost_grad": (b_cn, np.array([90.0, 50.0]), np.array([4.0, 6.0]), beta, 2.5, 1.1),
        "cn_delays": (b_cn, np.array([90.0, 50.0]), 2.5),
        "cn_delays_jac": (b_cn, np.array([90.0, 50.0]), 2.5),
    }


def time_callable(fn, args, repeats):
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return time.perf_counter() - start


def bench_kernels(repeats):
    compiled = kernels.compiled_impl()
    inputs = make_inputs()

    print("Warming up JIT compilation...")
    for name, args in inputs.items():
        compiled[name](*args)
    print("JIT warmup complete.\n")

    print("=" * 66)
    print(f"PER-KERNEL BENCHMARK ({repeats} calls each)")
    print("=" * 66)
    print(f"{'kernel':<16} {'compiled (s)':>13} {'pure (s)':>12} {'speedup':>9}")
    print("-" * 54)

    results = []
    for name, args in inputs.items():
        t_fast = time_callable(compiled[name], args, repeats)
        t_pure = time_callable(kernels.PURE_IMPL[name], args, repeats)
        speedup = t_pure / t_fast if t_fast > 0 else float("inf")
        print(f"{name:<16} {t_fast:>13.4f} {t_pure:>12.4f} {speedup:>8.1f}x")
        results.append({
            "kernel": name,
            "repeats": repeats,
            "compiled_seconds": t_fast,
            "pure_seconds": t_pure,
            "speedup": speedup,
        })
    return results


_E2E_SNIPPET = """
import time
import numpy as np
from e2eqos import scenario_5g as s5
from e2eqos.optimizer import (Polynomial, RunConfig, UniformGradientProportional,
                              apply_fictitious_budgets, run)

params = s5.FiveGParams()
problem = s5.build_problem(params, budgets=apply_fictitious_budgets(params.budgets, 0.6))
cfg = RunConfig(mu=2e4, schedule=Polynomial(0.1, 0.6),
                noise=UniformGradientProportional(0.75),
                iterations={iterations}, seed=0)
y0 = s5.default_initialization(params, np.random.default_rng(0))
run(problem, s5.default_weight_matrix(params), cfg, y0)  # compile + warm caches
start = time.perf_counter()
run(problem, s5.default_weight_matrix(params), cfg, y0)
print(time.perf_counter() - start)
"""


def bench_end_to_end(iterations):
    print()
    print("=" * 66)
    print(f"END-TO-END BENCHMARK (two-AN case study, {iterations} iterations)")
    print("=" * 66)
    times = {}
    for label, disable in (("compiled", "0"), ("pure", "1")):
        env = dict(os.environ, E2EQOS_DISABLE_NUMBA=disable)
        out = subprocess.run(
            [sys.executable, "-c", _E2E_SNIPPET.format(iterations=iterations)],
            capture_output=True, text=True, check=True, env=env, timeout=600,
        )
        times[label] = float(out.stdout.strip())
        print(f"{label:<10} {times[label]:>10.3f} s")
    speedup = times["pure"] / times["compiled"]
    print(f"{'speedup':<10} {speedup:>9.1f}x")
    return {
        "iterations": iterations,
        "compiled_seconds": times["compiled"],
        "pure_seconds": times["pure"],
        "speedup": speedup,
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--repeats", type=int, default=50000,
                        help="calls per kernel (default: 50000)")
    parser.add_argument("--iterations", type=int, default=1000,
                        help="optimizer iterations for the end-to-end run")
    parser.add_argument("--skip-e2e", action="store_true",
                        help="skip the end-to-end subprocess comparison")
    parser.add_argument("--output", default=None, help="write results to this JSON file")
    args = parser.parse_args(argv)

    if not kernels.numba_requested():
        print("note: E2EQOS_DISABLE_NUMBA is set; unset it to benchmark the "
              "compiled path.", file=sys.stderr)

    payload = {"kernels": bench_kernels(args.repeats)}
    if not args.skip_e2e:
        payload["end_to_end"] = bench_end_to_end(args.iterations)

    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)
        print(f"\nwrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
