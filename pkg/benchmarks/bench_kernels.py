"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py --records 2000

Both backends run on identical inputs and their outputs are compared before
any timing is reported.
"""
from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from sjpc import _backend
from sjpc.baselines import generate_synthetic
from sjpc.hashing import fingerprint_seed, sampling_key
from sjpc.sketch import FastAgmsSketch
from sjpc.subvalues import LevelTable


def best_of(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--records", type=int, default=2000)
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--s", type=int, default=3)
    ap.add_argument("--r", type=float, default=0.5)
    ap.add_argument("--width", type=int, default=1000)
    ap.add_argument("--depth", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if _backend.compiled is None:
        print("compiled kernels are not built; nothing to compare", file=sys.stderr)
        return 1
    backends = {"python": _backend.python, "cython": _backend.compiled}

    ds = generate_synthetic("skewed_20_80", args.records, args.d, seed=1)
    raw = ds.to_bytes()
    table = LevelTable.build(args.d, args.s)
    fp_seed, key = fingerprint_seed(0), sampling_key(0)
    sk = FastAgmsSketch(args.width, args.depth)

    def split(k):
        return k.split_lines(raw, 9, args.d)

    starts, ends, n, _ = split(backends["cython"])

    def emit(k):
        return k.emit_fingerprints(raw, starts, ends, n, args.d, args.s, args.r, fp_seed, key, 0,
                                   table.combos, table.offsets)

    _, fps = emit(backends["cython"])

    def update(k):
        counters = np.zeros_like(sk.counters)
        k.sketch_update(counters, sk._bucket_coef, sk._sign_coef, fps)
        return counters

    cases = {"split_lines": split, "emit_fingerprints": emit, "sketch_update": update}
    for name, fn in cases.items():
        a, b = fn(backends["python"]), fn(backends["cython"])
        a = a if isinstance(a, tuple) else (a,)
        b = b if isinstance(b, tuple) else (b,)
        if not all(np.array_equal(x, y) for x, y in zip(a, b)):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 2

    print(f"records={n} d={args.d} s={args.s} r={args.r} sub-values={len(fps)} "
          f"sketch={args.depth}x{args.width}")
    print(f"{'kernel':<20}{'python (s)':>12}{'cython (s)':>12}{'speedup':>10}")
    for name, fn in cases.items():
        t_py = best_of(lambda: fn(backends["python"]), args.repeat)
        t_cy = best_of(lambda: fn(backends["cython"]), args.repeat)
        print(f"{name:<20}{t_py:>12.4f}{t_cy:>12.5f}{t_py / t_cy:>9.0f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
