"""Compare the compiled and numpy detection kernels.

    python benchmarks/bench_kernels.py [--symbols N] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from mcassm import _kernels_py

try:
    from mcassm import _kernels as compiled
except ImportError:
    compiled = None


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--symbols", type=int, default=200_000)
    p.add_argument("--hypotheses", type=int, default=64)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    rng = np.random.default_rng(0)
    pts = rng.standard_normal((args.hypotheses, args.dim)) + 1j * rng.standard_normal((args.hypotheses, args.dim))
    z = pts[rng.integers(0, args.hypotheses, args.symbols)]
    z = np.ascontiguousarray(z + 0.5 * (rng.standard_normal(z.shape) + 1j * rng.standard_normal(z.shape)))
    a = rng.integers(0, 64, args.symbols)
    b = rng.integers(0, 64, args.symbols)

    impls = [("numpy", _kernels_py)] + ([("cython", compiled)] if compiled else [])
    if compiled is None:
        print("compiled extension not built; timing numpy only")
    else:
        assert np.array_equal(compiled.nearest(z, pts), _kernels_py.nearest(z, pts))
    base = {}
    print(f"{'kernel':<12}{'backend':<9}{'best (ms)':>10}{'Msym/s':>9}{'speedup':>9}")
    for kernel, call in (("nearest", lambda m: m.nearest(z, pts)), ("bit_errors", lambda m: m.bit_errors(a, b))):
        for name, mod in impls:
            best = min(timeit.repeat(lambda: call(mod), number=1, repeat=args.repeat))
            base.setdefault(kernel, best)
            print(f"{kernel:<12}{name:<9}{best * 1e3:>10.1f}{args.symbols / best / 1e6:>9.2f}{base[kernel] / best:>8.1f}x")


if __name__ == "__main__":
    main()
