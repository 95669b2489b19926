"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_backends.py [--sizes 256 512 1024] [--repeats 5]
"""

import argparse
import time

import numpy as np

from qops import kernels
from qops.workflows import ContrastParams


def best_of(fn, repeats):
    fn()  # warmup / jit
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1000


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 512, 1024])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    if not kernels.HAVE_NUMBA:
        print("numba is unavailable (or QOPS_DISABLE_NUMBA is set); timing numpy only")

    f, g = (1 / np.sqrt(3),) * 3, (0.0, 0.0, 1.0)
    p = ContrastParams.natural()
    cargs = (p.alpha, p.beta, p.gamma, p.delta, p.c_u.as_tuple(), p.c_l.as_tuple())
    rs = np.random.default_rng(0)

    print(f"{'kernel':<10}{'size':>7}{'numpy ms':>11}{'numba ms':>11}{'parallel ms':>13}{'speedup':>9}")
    for n in args.sizes:
        q = rs.uniform(1e-3, 1, (n, n, 4))
        q[..., 0] = 0
        cases = {
            "split": lambda **kw: kernels.split_image(q, f, g, -1, **kw),
            "log_exp": lambda **kw: kernels.log_exp(q, **kw),
            "contrast": lambda **kw: kernels.contrast(q, *cargs, **kw),
        }
        for name, fn in cases.items():
            t_np = best_of(lambda: fn(backend="numpy"), args.repeats)
            if not kernels.HAVE_NUMBA:
                print(f"{name:<10}{n:>7}{t_np:>11.2f}")
                continue
            t_nb = best_of(lambda: fn(backend="numba", parallel=False), args.repeats)
            t_par = best_of(lambda: fn(backend="numba", parallel=True), args.repeats)
            a, b = fn(backend="numpy"), fn(backend="numba")
            if not np.allclose(a, b, rtol=1e-9, atol=1e-9 * np.abs(a).max()):
                print(f"  WARNING: {name} backends disagree at {n}x{n}")
            print(f"{name:<10}{n:>7}{t_np:>11.2f}{t_nb:>11.2f}{t_par:>13.2f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
