"""Compare the numba and numpy kernel paths.

    python3 benchmarks/bench_kernels.py [--quick]

Prints one CSV row per (kernel, size) with the best-of-N wall time of each
path and the speedup.  The end-to-end rows run a P1 protocol instance in a
subprocess with ``UPSU_DISABLE_NUMBA`` set and unset, so they include the
whole library rather than one kernel.
"""

import argparse
import csv
import os
import subprocess
import sys
import time

import numpy as np

from upsu import _kernels
from upsu.field import DEFAULT_PRIME, PrimeField

P = DEFAULT_PRIME


def best_of(fn, repeat):
    fn()  # warm-up (and numba compilation)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_rows(sizes, repeat):
    rng = np.random.default_rng(0)
    nb, npk = _kernels.numba_kernels, _kernels.numpy_kernels
    fields = {k.name: PrimeField(P, kernels=k) for k in (nb, npk) if k is not None}
    for n in sizes:
        a = rng.integers(0, P, n, dtype=np.uint64)
        b = rng.integers(0, P, n, dtype=np.uint64)
        cases = {
            "mulmod": lambda f: f.mul(a, b),
            "poly_mul_ntt": lambda f: f.conv(a, b),
        }
        small = 16
        lanes = max(1, n // small)
        sa = rng.integers(0, P, (small, lanes), dtype=np.uint64)
        sb = rng.integers(0, P, (small, lanes), dtype=np.uint64)
        cases["conv_naive_batched"] = lambda f: f.conv_naive(sa, sb)
        for name, fn in cases.items():
            t = {k: best_of(lambda f=f: fn(f), repeat) for k, f in fields.items()}
            yield name, n, t.get("numba"), t["numpy"]


_E2E = """
import time
from upsu.protocol import ProtocolParams, run_local
params = ProtocolParams(protocol={proto}, sender_capacity=32)
X = list(range(1, {n} + 1)); Y = list(range({n} - 10, {n} + 22))
run_local(X[:64], Y, params, seed=0)
t0 = time.perf_counter()
run_local(X, Y, params, seed=1)
print(time.perf_counter() - t0)
"""


def e2e_rows(ns, protos):
    for proto in protos:
        for n in ns:
            t = {}
            for path, flag in (("numba", ""), ("numpy", "1")):
                env = dict(os.environ, UPSU_DISABLE_NUMBA=flag)
                out = subprocess.run(
                    [sys.executable, "-c", _E2E.format(proto=proto, n=n)],
                    env=env, capture_output=True, text=True, check=True,
                )
                t[path] = float(out.stdout.strip().splitlines()[-1])
            yield f"protocol{proto}_run", n, t["numba"], t["numpy"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="small sizes only")
    args = ap.parse_args(argv)
    sizes = [1 << 12, 1 << 14] if args.quick else [1 << 12, 1 << 14, 1 << 16, 1 << 18]
    repeat = 3 if args.quick else 7
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["kernel", "n", "numba_s", "numpy_s", "speedup"])
    rows = list(kernel_rows(sizes, repeat))
    rows += list(e2e_rows([256] if args.quick else [256, 1024], [1, 2]))
    for name, n, tn, tp in rows:
        w.writerow([name, n, f"{tn:.6f}" if tn else "", f"{tp:.6f}", f"{tp / tn:.2f}" if tn else ""])


if __name__ == "__main__":
    main()
