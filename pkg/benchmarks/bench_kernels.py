#!/usr/bin/env python3
"""Benchmark the compiled residual kernels against the NumPy fallback.

Builds a synthetic interaction matrix shaped like a production corpus (many
users, few influencer columns), then times the two operator products and a
full leading-triplet solve on each backend.

    python benchmarks/bench_kernels.py [--rows 500000] [--cols 200] [--nnz-per-row 8]
"""

import argparse
import time

import numpy as np

from echoaudit import kernels
from echoaudit.ideology import InteractionMatrix, leading_singular_triplet, normalize


def build_matrix(rng, n_rows, n_cols, nnz_per_row):
    """Two-community interaction matrix, the shape the solver actually sees.

    Rows mostly hit their own community's column half; a purely unstructured
    random matrix would have a near-degenerate spectral gap, which is exactly
    the regime correspondence analysis isn't for.
    """
    half = n_cols // 2
    side = rng.integers(0, 2, size=n_rows)
    own = rng.integers(0, half, size=(n_rows, nnz_per_row))
    cross_mask = rng.random((n_rows, nnz_per_row)) < 0.05
    cols = own + half * side[:, None]
    cols[cross_mask] = (own[cross_mask] + half * (1 - side[:, None].repeat(
        nnz_per_row, axis=1)[cross_mask]))
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    indices = []
    data = []
    for i in range(n_rows):
        unique = np.unique(cols[i])
        indices.append(unique)
        data.append(rng.integers(1, 6, size=unique.size))
        indptr[i + 1] = indptr[i] + unique.size
    m = InteractionMatrix(
        row_ids=tuple(f"u{i:07d}" for i in range(n_rows)),
        col_ids=tuple(f"c{j:04d}" for j in range(n_cols)),
        indptr=indptr,
        indices=np.concatenate(indices).astype(np.int64),
        data=np.concatenate(data).astype(np.float64),
    )
    return m


def time_call(fn, repeats=10):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=500_000)
    ap.add_argument("--cols", type=int, default=200)
    ap.add_argument("--nnz-per-row", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"building {args.rows} x {args.cols} matrix "
          f"(~{args.nnz_per_row} nnz/row) ...")
    m = build_matrix(rng, args.rows, args.cols, args.nnz_per_row)
    print(f"nnz = {m.nnz}")

    v = rng.standard_normal(args.cols)
    u = rng.standard_normal(args.rows)

    results = {}
    for backend in kernels.available_backends():
        norm = normalize(m, backend=backend)
        mv = time_call(lambda: norm.matvec(v))
        rmv = time_call(lambda: norm.rmatvec(u))
        t0 = time.perf_counter()
        triplet = leading_singular_triplet(norm, seed=1)
        solve = time.perf_counter() - t0
        results[backend] = (mv, rmv, solve, triplet.iterations, triplet.sigma)

    print(f"\n{'backend':10} {'matvec':>12} {'rmatvec':>12} "
          f"{'solve':>12} {'iters':>6} {'sigma1':>12}")
    for backend, (mv, rmv, solve, iters, sigma) in sorted(results.items()):
        print(f"{backend:10} {mv * 1e3:10.2f}ms {rmv * 1e3:10.2f}ms "
              f"{solve * 1e3:10.2f}ms {iters:6d} {sigma:12.6f}")

    if len(results) == 2:
        f = results["fallback"]
        c = results["compiled"]
        print(f"\nspeedup (fallback/compiled): matvec {f[0] / c[0]:.1f}x, "
              f"rmatvec {f[1] / c[1]:.1f}x, solve {f[2] / c[2]:.1f}x")
        assert abs(f[4] - c[4]) <= 1e-9 * max(1.0, abs(f[4])), "backends disagree"
        print("backends agree on sigma1 to 1e-9")


if __name__ == "__main__":
    main()
