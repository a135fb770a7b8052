"""Compare the compiled coupling kernel against the numpy fallback.

The two backends are required to be bit-identical; this script only
measures the speed gap on representative collapse-run workloads.

    python benchmarks/kernel_benchmark.py --sizes 64,128,256 --repeat 20
"""

import argparse
import time

import numpy as np

from mzk import _kernels_py

try:
    from mzk import _kernels
except ImportError:
    _kernels = None


def sample_arrays(n, seed=0):
    """Collapse-like field snapshot: focused beam over a density well."""
    rng = np.random.default_rng(seed)
    x = np.linspace(-8.0, 8.0, n, endpoint=False)
    r_sq = x[:, None] ** 2 + x[None, :] ** 2
    e1 = 0.8 * np.exp(-r_sq / 4.0) * np.exp(0.3j * r_sq)
    e1 += 0.01 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    e2 = -1j * e1
    n_field = -(np.abs(e1) ** 2 + np.abs(e2) ** 2)
    return np.ascontiguousarray(e1), np.ascontiguousarray(e2), n_field


def bench(impl, e1, e2, n_field, eta, dt, nsub, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        impl.coupling_substep(e1, e2, n_field, eta, dt, nsub)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="64,128,256",
                    help="comma-separated grid sizes")
    ap.add_argument("--nsub", type=int, default=4)
    ap.add_argument("--dt", type=float, default=4e-3)
    ap.add_argument("--eta", type=float, default=1.0)
    ap.add_argument("--repeat", type=int, default=20,
                    help="repetitions; the best time is reported")
    args = ap.parse_args()

    if _kernels is None:
        print("compiled extension not built; only the numpy backend is timed")
    print(f"nsub = {args.nsub}, dt = {args.dt:g}, eta = {args.eta:g}, "
          f"best of {args.repeat}")
    print(f"{'grid':>10} {'numpy':>12} {'compiled':>12} {'speedup':>9}")

    for size in (int(s) for s in args.sizes.split(",")):
        e1, e2, n_field = sample_arrays(size)
        t_py = bench(_kernels_py, e1, e2, n_field, args.eta, args.dt,
                     args.nsub, args.repeat)
        if _kernels is None:
            print(f"{size:>7}^2 {t_py * 1e3:>10.3f}ms {'-':>12} {'-':>9}")
            continue
        t_cy = bench(_kernels, e1, e2, n_field, args.eta, args.dt,
                     args.nsub, args.repeat)
        a = _kernels_py.coupling_substep(e1, e2, n_field, args.eta, args.dt,
                                         args.nsub)
        b = _kernels.coupling_substep(e1, e2, n_field, args.eta, args.dt,
                                      args.nsub)
        identical = all(np.array_equal(x, y) for x, y in zip(a[:2], b[:2]))
        flag = "" if identical else "  BACKENDS DISAGREE"
        print(f"{size:>7}^2 {t_py * 1e3:>10.3f}ms {t_cy * 1e3:>10.3f}ms "
              f"{t_py / t_cy:>8.1f}x{flag}")


if __name__ == "__main__":
    main()
