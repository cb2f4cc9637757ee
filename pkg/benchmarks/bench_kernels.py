#!/usr/bin/env python3
"""Benchmark the numpy and numba kernel flavors against each other.

Times the two hot kernels (column synthesis and agent advancement) on a
letter-E-sized workload, checks that both flavors return bitwise identical
arrays, and prints a small table.  Run from the repository root:

    python3 benchmarks/bench_kernels.py [--rows 20] [--cols 20]
                                        [--agents 5000] [--repeats 20]
"""
from __future__ import annotations

import argparse
import os
import time

os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numpy as np

from swarmguide import build_grid_topology
from swarmguide._kernels import (
    HAS_NUMBA,
    advance_agents_numba,
    advance_agents_numpy,
    synth_recurrent_numba,
    synth_recurrent_numpy,
)


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20)
    ap.add_argument("--cols", type=int, default=20)
    ap.add_argument("--agents", type=int, default=5000)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    topo = build_grid_topology(args.rows, args.cols, 1)
    m = topo.m
    v = rng.random(m) + 0.01
    v /= v.sum()
    x = rng.random(m)
    x[rng.random(m) < 0.2] = 0.0
    x /= x.sum()
    d = float((topo.adjacency.sum(axis=0) - 1).max() + 1)
    e = v - x

    synth_args = (e, x, topo.adjacency, d)
    matrix = synth_recurrent_numpy(*synth_args)
    cum = np.cumsum(matrix, axis=0)
    bins = rng.integers(0, m, size=args.agents)
    z = rng.random(args.agents)
    advance_args = (bins, z, cum)

    cases = [
        ("synth_recurrent", synth_recurrent_numpy, synth_recurrent_numba, synth_args),
        ("advance_agents", advance_agents_numpy, advance_agents_numba, advance_args),
    ]

    print(f"grid {args.rows}x{args.cols} ({m} bins), {args.agents} agents, "
          f"best of {args.repeats} runs")
    header = f"{'kernel':<16} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}  bitwise"
    print(header)
    print("-" * len(header))
    for name, np_fn, nb_fn, call_args in cases:
        t_np = best_of(np_fn, call_args, args.repeats)
        if HAS_NUMBA:
            nb_fn(*call_args)  # compile outside the timed region
            t_nb = best_of(nb_fn, call_args, args.repeats)
            match = np_fn(*call_args).tobytes() == nb_fn(*call_args).tobytes()
            print(f"{name:<16} {t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} "
                  f"{t_np / t_nb:>7.1f}x  {'equal' if match else 'DIFFER'}")
            if not match:
                return 1
        else:
            print(f"{name:<16} {t_np * 1e3:>10.3f} {'n/a':>10} {'n/a':>8}  n/a")
    if not HAS_NUMBA:
        print("numba is not importable; only the numpy flavor was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
