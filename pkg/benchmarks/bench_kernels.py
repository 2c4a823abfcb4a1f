"""Wall-clock comparison of the compiled and pure-Python event loops.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

from freessep.interface import coupled_delta_sandwich, evolve_uncentered
from freessep.lattice import Interface, ParticleConfig
from freessep.particle import simulate_particle

CASES = {
    "particle J=0.5 T=1e5": lambda b: simulate_particle(ParticleConfig.heaviside(1), 0.5, 1e5, 1, record=False, backend=b),
    "particle J=0.05 T=2e4": lambda b: simulate_particle(ParticleConfig.heaviside(1), 0.05, 2e4, 1, record=False, backend=b),
    "interface J=0.5 T=2000": lambda b: evolve_uncentered(Interface.cone(0, 0), 0.5, 2000.0, 1, backend=b),
    "sandwich J=0.5 d=1 T=500": lambda b: coupled_delta_sandwich(Interface.cone(0, 0), 0.5, 1.0, 500.0, 1, backend=b),
}


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    print(f"{'case':28s} {'cython [s]':>11s} {'python [s]':>11s} {'speedup':>8s}")
    for name, fn in CASES.items():
        tc = best_of(lambda: fn("cython"), args.repeat)
        tp = best_of(lambda: fn("python"), args.repeat)
        print(f"{name:28s} {tc:11.4f} {tp:11.4f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
