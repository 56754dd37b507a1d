#!/usr/bin/env python3
"""Benchmark: compiled stencil kernels vs the numpy fallback.

Times the hot pieces of the solver loop (directional second differences and
the nonlinear combination rules) on realistic cut-cell systems, plus one
end-to-end extremal-operator solve per backend.

Usage: python benchmarks/bench_kernels.py [--h 1/256] [--repeats 5]
"""

import argparse
import time

import numpy as np

from regulab import kernels
from regulab.geometry import make_domain
from regulab.grid import build_grid
from regulab.manufactured import make_field
from regulab.operators import catalog_operator
from regulab.stencil import discretize


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(h, repeats):
    try:
        backends = {"python": kernels.get_backend("python"),
                    "cython": kernels.get_backend("cython")}
    except ImportError:
        backends = {"python": kernels.get_backend("python")}
        print("note: compiled kernels unavailable, timing the fallback only")

    grid = build_grid(make_domain("half_ball"), h, 1.0)
    system = discretize(catalog_operator("pucci+", 1, 2), grid, 16)
    iso = discretize(catalog_operator("isaacs", 1, 2), grid, 16)
    t = system.table
    rng = np.random.default_rng(0)
    u = rng.normal(size=grid.n_nodes)
    feet = rng.normal(size=t.n_feet)
    bconst = t.bconst(feet)
    frames = system.plan.frames
    W = iso.plan.W
    print(f"grid: {grid.n_nodes} nodes, {t.n_lines} stencil lines, h = {h:g}")
    print(f"{'kernel':<22}" + "".join(f"{name:>12}" for name in backends)
          + f"{'speedup':>10}")

    rows = [
        ("second_diffs", lambda m: lambda: m.second_diffs(
            u, t.nbp_clip, t.nbm_clip, t.wpz, t.wmz, t.w0, bconst)),
    ]
    delta = backends["python"].second_diffs(
        u, t.nbp_clip, t.nbm_clip, t.wpz, t.wmz, t.w0, bconst)
    rows += [
        ("combine_pucci(max)", lambda m: lambda: m.combine_pucci(
            delta, frames, 1.0, 2.0, True)),
        ("combine_isaacs", lambda m: lambda: m.combine_isaacs(delta, W)),
        ("combine_linear", lambda m: lambda: m.combine_linear(delta, t.w0[0] * 0 + 1.0)),
        ("relax_step", lambda m: lambda: m.relax_step(
            u, delta[:, 0].copy(), np.abs(delta[:, 1]) + 1.0, 0.7)),
    ]
    for name, make in rows:
        times = {bname: time_call(make(mod), repeats) for bname, mod in backends.items()}
        line = f"{name:<22}" + "".join(f"{times[b]*1e3:>10.2f}ms" for b in backends)
        if len(times) == 2:
            line += f"{times['python'] / times['cython']:>9.1f}x"
        print(line)

    # end-to-end solve with each backend swapped in
    import regulab.stencil as stencil_mod

    g = make_field("arc_modes", [1.0, 0.3])
    saved = stencil_mod.kernels
    print()
    for bname, mod in backends.items():
        try:
            stencil_mod.kernels = mod
            from regulab.solver import solve

            t0 = time.perf_counter()
            solve(system, 0.0, g, tol=1e-10)
            dt = time.perf_counter() - t0
            print(f"full extremal-operator solve [{bname:>7}]: {dt:8.2f}s")
        finally:
            stencil_mod.kernels = saved


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--h", type=float, default=1 / 256)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    bench(args.h, args.repeats)
