"""Compare the compiled and numpy kernels on lattice-sized inputs.

Usage: python3 benchmarks/bench_kernels.py [--size 262144] [--repeat 20]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from besov_ns import kernels


def cases(size: int, seed: int = 42):
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.0, 200.0, size)
    r[: size // 100] = 2.0   # exercise the degenerate branch
    s = rng.uniform(-0.2, 1.2, size)
    m = [rng.standard_normal(size) for _ in range(4)]
    a = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    d = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return {
        "green_entries": lambda b: kernels.green_entries(r, 0.3, 1.0, backend=b),
        "smooth_ramp": lambda b: kernels.smooth_ramp(s, backend=b),
        "apply_2x2": lambda b: kernels.apply_2x2(*m, a, d, backend=b),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=256 * 256 * 4)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"size={args.size} repeat={args.repeat} active backend={kernels.BACKEND}")
    print(f"{'kernel':<16}" + "".join(f"{b + ' [ms]':>16}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases(args.size).items():
        times = {}
        outs = {}
        for b in backends:
            outs[b] = fn(b)
            times[b] = min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat)) * 1e3
        if len(backends) == 2:
            diff = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y))))
                       for x, y in zip(outs["numpy"], outs["cython"])) if isinstance(outs["numpy"], tuple) \
                else float(np.max(np.abs(outs["numpy"] - outs["cython"])))
            speed = f"{times['numpy'] / times['cython']:>9.2f}x"
            tail = f"  max diff {diff:.1e}"
        else:
            speed, tail = f"{'n/a':>10}", ""
        print(f"{name:<16}" + "".join(f"{times[b]:>16.3f}" for b in backends) + speed + tail)


if __name__ == "__main__":
    main()
