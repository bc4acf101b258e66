"""Compare the compiled and pure-Python propagation kernels.

Usage: python benchmarks/bench_kernels.py [--steps 1000 10000 100000] [--repeat 3]
"""
import argparse
import timeit

import numpy as np

from geophase import _kernels_py, kernels


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, nargs="+", default=[1_000, 10_000, 100_000, 200_000])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    backends = {"python": _kernels_py.propagate}
    if kernels.BACKEND == "cython":
        backends["cython"] = kernels.propagate
    else:
        print("compiled extension not available; timing the fallback only")

    print(f"{'steps':>8}  " + "  ".join(f"{name:>12}" for name in backends) + "   speedup   max |diff|")
    for n in args.steps:
        coeffs = np.ascontiguousarray(rng.uniform(-5, 5, size=(n, 4)))
        dts = np.full(n, 1e-3)
        times = {
            name: min(timeit.repeat(lambda f=f: f(coeffs, dts), number=1, repeat=args.repeat))
            for name, f in backends.items()
        }
        row = f"{n:>8}  " + "  ".join(f"{times[name]:>11.4f}s" for name in backends)
        if "cython" in backends:
            diff = np.abs(backends["cython"](coeffs, dts) - backends["python"](coeffs, dts)).max()
            row += f"   {times['python'] / times['cython']:>6.1f}x   {diff:.1e}"
        print(row)


if __name__ == "__main__":
    main()
