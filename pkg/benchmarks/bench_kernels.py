"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N] [--t-end WEEKS]

Reports per-call times for the hot kernels and the wall time of a full
periodic run (narrow gaussian, sigma = 0.0009) with each backend.
"""
import argparse
import time
import timeit

import numpy as np

from hysir import _backend
from hysir import simulate as sim
from hysir.preisach import MemoryStaircase, gaussian_density
from hysir.sir import ModelParams, SirState


def kernel_calls(k, d):
    kind, par, tab, atoms = d.kernel_args
    M = np.array([0.3, 0.01, 0.006, 0.0059, 0, 0])
    m = np.array([1e-12, 1e-5, 5e-4, 0, 0, 0])
    sM, sm = np.zeros(6), np.zeros(6)
    K = np.zeros((7, 2))
    e = np.zeros(0)
    e8 = np.zeros(0, dtype=np.uint8)
    return {
        "tri_mass": lambda: k.tri_mass(0.0047, kind, par, tab, atoms),
        "profile_mass": lambda: k.profile_mass(M, 4, m, 3, 0.003, False, kind, par, tab, atoms),
        "swept_mass": lambda: k.swept_mass(M, 4, m, 3, 0.003, False, 0.00595, sM, sm, kind, par, tab, atoms),
        "dp5_step": lambda: k.dp5_step(-6.0, 0.05, 0.1, 0.01, 0.1, 10.8, 0.6, 0.0006, 0.0,
                                       M, 4, m, 3, 0.003, False, sM, sm, kind, par, tab, atoms,
                                       False, e, e, e, e8, K),
    }


def full_run(k, d, t_end):
    sim.kernels = k
    p = ModelParams(10.8, 0.5994, 0.0006, 0.0)
    t0 = time.perf_counter()
    tr = sim.integrate(p, d, SirState(1e-5, 1 - 1e-5), MemoryStaircase.virgin(1e-5), t_end)
    return time.perf_counter() - t0, tr.n_steps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20000)
    ap.add_argument("--t-end", type=float, default=5000.0)
    args = ap.parse_args()
    d = gaussian_density(0.0002, 0.0055, 0.0009)
    names = _backend.available()
    res = {}
    for name in names:
        k = _backend.load(name)
        res[name] = {key: min(timeit.repeat(fn, number=args.repeat, repeat=3)) / args.repeat
                     for key, fn in kernel_calls(k, d).items()}
        res[name]["run"], steps = full_run(k, d, args.t_end)
    print(f"{'kernel':<14}" + "".join(f"{n:>14}" for n in names) + ("      speedup" if len(names) > 1 else ""))
    for key in res[names[0]]:
        unit = "s" if key == "run" else "us"
        scale = 1.0 if key == "run" else 1e6
        row = f"{key:<14}" + "".join(f"{res[n][key] * scale:>12.3f}{unit:>2}" for n in names)
        if len(names) > 1:
            row += f"{res['python'][key] / res['cython'][key]:>12.1f}x"
        print(row)
    print(f"(full run: periodic case sigma=0.0009, t_end={args.t_end:g} weeks, {steps} steps)")


if __name__ == "__main__":
    main()
