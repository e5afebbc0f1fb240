"""Compare the compiled and pure-Python kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from twowayrelay.kernels import get_backend


def cases(rng):
    c = np.sort(rng.exponential(5.0, 4)) + 1e-2
    x = rng.standard_normal((2, 5000)) + 1j * rng.standard_normal((2, 5000))
    bits = rng.integers(0, 2, (2, 5000, 2), dtype=np.uint8)
    return {
        "waterfill_inner (4 streams)": lambda k: k.waterfill_inner(c, 3.0, 200),
        "solve_pair (4 streams)": lambda k: k.solve_pair(c, 3.0, 7.0, 1e-10, 500),
        "count_bit_errors (10^4 symbols)": lambda k: k.count_bit_errors(x, bits),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": get_backend("python")}
    try:
        backends["cython"] = get_backend("cython")
    except ImportError:
        print("compiled backend not built; timing the Python backend only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s}" + "".join(f"{b:>14s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in cases(rng).items():
        per_call = {}
        for bname, mod in backends.items():
            timer = timeit.Timer(lambda: fn(mod))
            n, _ = timer.autorange()
            per_call[bname] = min(timer.repeat(args.repeat, n)) / n
        row = f"{name:34s}" + "".join(f"{per_call[b] * 1e6:11.1f} us" for b in backends)
        if len(backends) > 1:
            row += f"{per_call['python'] / per_call['cython']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
