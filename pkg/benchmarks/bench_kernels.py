"""Time the numba and numpy backends on the same workloads.

    python benchmarks/bench_kernels.py [--n 50] [--repeat 5]

Each workload is run once to warm up (numba compiles on first call), then
timed as the best of ``--repeat`` runs.
"""

import argparse
import time

from adoptmatch import kernels
from adoptmatch.equilibrium import Side, solve_equilibrium, start_point, t_map
from adoptmatch.gen import generate_instance
from adoptmatch.model import Agent, Regime
from adoptmatch.montecarlo import simulate_utility
from adoptmatch.strategies import induce_profile
from adoptmatch.utilities import utilities


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(n, runs):
    inst = generate_instance(n, n, 0.25, 0)
    y = start_point(inst, Side.FAMILY_OPTIMAL)
    res = solve_equilibrium(inst, Regime.FS, Side.FAMILY_OPTIMAL)
    s = res.profile
    small = generate_instance(3, 3, 0.25, 0, delta_C=0.9, delta_F=0.9)
    s_small = solve_equilibrium(small, Regime.CS, Side.FAMILY_OPTIMAL).profile
    return {
        f"utilities FS {n}x{n}": lambda: utilities(inst, s, Regime.FS),
        f"utilities CS {n}x{n}": lambda: utilities(inst, s, Regime.CS),
        f"induce FS {n}x{n}": lambda: induce_profile(inst, y, Regime.FS),
        f"t_map FS {n}x{n}": lambda: t_map(inst, y, Regime.FS),
        f"solve fo-FSE {n}x{n}": lambda: solve_equilibrium(inst, Regime.FS, Side.FAMILY_OPTIMAL),
        f"solve fo-CSE {n}x{n}": lambda: solve_equilibrium(inst, Regime.CS, Side.FAMILY_OPTIMAL),
        f"simulate child {runs} runs": lambda: simulate_utility(small, s_small, Regime.CS, Agent.child(0), runs),
        f"simulate family {runs} runs": lambda: simulate_utility(small, s_small, Regime.CS, Agent.family(0), runs),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--runs", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    prev = kernels.backend_name()
    table = {}
    try:
        for name in kernels.BACKENDS:
            kernels.use_backend(name)
            for label, fn in workloads(args.n, args.runs).items():
                table.setdefault(label, {})[name] = best_of(fn, args.repeat)
    finally:
        kernels.use_backend(prev)

    width = max(map(len, table))
    print(f"{'workload':<{width}}  {'numba ms':>10}  {'numpy ms':>10}  {'speedup':>8}")
    for label, t in table.items():
        print(f"{label:<{width}}  {1e3 * t['numba']:>10.3f}  {1e3 * t['numpy']:>10.3f}  "
              f"{t['numpy'] / t['numba']:>7.1f}x")
    return table


if __name__ == "__main__":
    main()
