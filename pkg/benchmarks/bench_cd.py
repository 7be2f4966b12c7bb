"""Compare the compiled coordinate-descent kernel with the pure-Python fallback.

    python benchmarks/bench_cd.py [--n 200] [--p 800] [--repeat 5]

Both kernels run on identical lasso problems along a short lambda path; the
script reports the median wall time per fit and checks that the
coefficients agree bit for bit.
"""
import argparse
import statistics
import time

import numpy as np

from honestsets import _backend, solvers
from honestsets.simlab import design


def _problem(n, p, s, seed):
    gen = np.random.default_rng(seed)
    X = design.normalize_columns(design.build_covariance("toeplitz", p).sample(n, gen))
    beta = np.zeros(p)
    beta[gen.choice(p, s, replace=False)] = gen.uniform(-2, 2, s)
    return X, X @ beta + gen.standard_normal(n)


def _time_fits(kernel, X, y, lambdas, repeat):
    times, coefs = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = [solvers._coordinate_descent(X, y, lam, None, 1e-7, 100_000, None, kernel=kernel).coefficients
               for lam in lambdas]
        times.append((time.perf_counter() - t0) / len(lambdas))
        coefs = out
    return statistics.median(times), coefs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--p", type=int, default=800)
    ap.add_argument("--s", type=int, default=10)
    ap.add_argument("--n-lambda", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    X, y = _problem(args.n, args.p, args.s, args.seed)
    lam_max = solvers.lambda_max(X, y)
    lambdas = solvers.lambda_grid(lam_max, args.n_lambda, 0.01)

    results = {}
    for name in ("cython", "python"):
        try:
            kernel = _backend.load(name)
        except ImportError:
            print(f"{name:>7}: not built, skipped")
            continue
        results[name] = _time_fits(kernel, X, y, lambdas, args.repeat)
        print(f"{name:>7}: {1e3 * results[name][0]:9.3f} ms per fit")

    if len(results) == 2:
        (tc, bc), (tp, bp) = results["cython"], results["python"]
        same = all(np.array_equal(a, b) for a, b in zip(bc, bp))
        print(f"speedup {tp / tc:.1f}x; coefficients identical: {same}")


if __name__ == "__main__":
    main()
