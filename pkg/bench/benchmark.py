"""Compare the compiled kernels with the numpy fallback.

    python bench/benchmark.py --n 20000 --d 4096 --m 1024 --s 64

Reports the best-of-``--repeat`` wall time for column sampling, embedding a
sparse dataset and pairwise squared distances, and checks that both backends
return identical bytes.
"""

import argparse
import time

import numpy as np

from sparsejl.kernels import load_backend
from sparsejl.vectors import random_unit_dataset


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def run(backend, args, csr, pairs):
    indptr, indices, data = csr
    bs = args.m // args.s
    timings = {}
    timings["sample"], (rows, signs) = best_time(lambda: backend.sample_columns(args.seed, 0, args.d, args.s, bs), args.repeat)

    def embed():
        out = np.zeros((indptr.size - 1, args.m))
        backend.scatter_csr(indptr, indices, data, rows, signs, args.s**-0.5, out)
        return out

    timings["embed"], Y = best_time(embed, args.repeat)
    I, J = pairs
    timings["pairs"], dist = best_time(lambda: backend.pair_sq_dists(Y, I, J), args.repeat)
    return timings, (rows, signs, Y, dist)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=20_000, help="points")
    p.add_argument("--d", type=int, default=4096, help="ambient dimension")
    p.add_argument("--nnz", type=int, default=64, help="nonzeros per point")
    p.add_argument("--m", type=int, default=1024)
    p.add_argument("--s", type=int, default=64)
    p.add_argument("--pairs", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if args.m % args.s:
        p.error("--s must divide --m")

    X = random_unit_dataset(args.n, args.d, nnz=args.nnz, seed=args.seed)
    csr = X.to_csr()
    rng = np.random.default_rng(args.seed)
    I = rng.integers(0, args.n, args.pairs).astype(np.int64)
    J = rng.integers(0, args.n, args.pairs).astype(np.int64)

    py_times, py_out = run(load_backend("python"), args, csr, (I, J))
    try:
        compiled = load_backend("compiled")
    except ImportError as exc:
        print(f"compiled backend unavailable: {exc}")
        compiled = None

    print(f"n={args.n} d={args.d} nnz={args.nnz} m={args.m} s={args.s} pairs={args.pairs}")
    print(f"{'kernel':<8} {'python':>10} {'compiled':>10} {'speedup':>8}")
    if compiled is None:
        for k, v in py_times.items():
            print(f"{k:<8} {v:>9.4f}s {'-':>10} {'-':>8}")
        return
    c_times, c_out = run(compiled, args, csr, (I, J))
    for k in py_times:
        print(f"{k:<8} {py_times[k]:>9.4f}s {c_times[k]:>9.4f}s {py_times[k] / c_times[k]:>7.1f}x")
    same = all(a.tobytes() == b.tobytes() for a, b in zip(py_out, c_out))
    print(f"identical outputs: {same}")


if __name__ == "__main__":
    main()
