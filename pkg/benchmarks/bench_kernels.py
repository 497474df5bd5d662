"""Times the compiled and numpy versions of the hot solver kernel.

Usage: ``python benchmarks/bench_kernels.py [--n 128] [--repeat 50]``
"""
import argparse
import timeit

import numpy as np

from indefsl._core import compiled_kernels, python_kernels


def bench(module, u, v, dx, repeat, number):
    z = np.empty_like(u)
    a = np.empty_like(u)
    t = timeit.repeat(lambda: module.z11_m3(u, v, dx, z, a), repeat=repeat, number=number)
    return min(t) / number, z


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128, help="grid side")
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--number", type=int, default=10)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    dx = 8.0 / args.n
    u = np.ascontiguousarray(0.01 * rng.standard_normal((args.n, args.n)))
    v = np.ascontiguousarray(0.01 * rng.standard_normal((args.n, args.n)))

    t_py, z_py = bench(python_kernels, u, v, dx, args.repeat, args.number)
    print(f"grid {args.n}x{args.n}")
    print(f"python  z11_m3: {t_py * 1e6:10.1f} us/call")
    if compiled_kernels is None:
        print("cython  z11_m3: extension not built")
        return
    t_c, z_c = bench(compiled_kernels, u, v, dx, args.repeat, args.number)
    print(f"cython  z11_m3: {t_c * 1e6:10.1f} us/call")
    print(f"speedup: {t_py / t_c:.2f}x, max |difference| = {np.max(np.abs(z_py - z_c)):.2e}")


if __name__ == "__main__":
    main()
