"""Benchmark the 4-D reconstruction kernels: numba vs pure numpy.

Run:  python benchmarks/bench_kernels.py [N]

The kernels are the only jitted code in the package; everything else is
BLAS-shaped numpy.  Set PHASELAB_NUMBA=0 to make the package fall back
to the numpy paths at import time; this script times both paths
explicitly regardless of the flag.
"""

import sys
import time

import numpy as np

from phaselab import _kernels


def make_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    s0 = rng.uniform(0.1, 2.0, size=(n, n))
    s1 = rng.uniform(0.1, 2.0, size=(n, n))
    s2 = rng.uniform(0.1, 2.0, size=(n, n))
    inv01 = rng.uniform(0.5, 1.5, size=n)
    inv12 = rng.uniform(0.5, 1.5, size=n)
    mask = np.ones((n, n), dtype=bool)
    w = [rng.uniform(0.1, 1.0, size=n) for _ in range(4)]
    return s0, s1, s2, inv01, inv12, mask, w


def time_call(fn, *args, repeats=3):
    best = np.inf
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 48
    s0, s1, s2, inv01, inv12, mask, w = make_inputs(n)
    rng = np.random.default_rng(1)

    rows = []

    def bench(name, np_fn, nb_fn, args):
        t_np, ref = time_call(np_fn, *args)
        if nb_fn is not None:
            nb_fn(*args)  # compile outside the timer
            t_nb, out = time_call(nb_fn, *args)
            if isinstance(ref, tuple):
                err = max(np.max(np.abs(a - b)) for a, b in zip(ref, out))
            elif isinstance(ref, np.ndarray):
                err = np.max(np.abs(ref - out))
            else:
                err = max(abs(a - b) for a, b in zip(ref, out))
        else:
            t_nb, err = np.nan, np.nan
        rows.append((name, t_np, t_nb, t_np / t_nb if t_nb == t_nb else np.nan, err))
        return ref

    rho = bench("rho0_dense", _kernels.rho0_dense_numpy, _kernels.rho0_dense_numba,
                (s0, s1, s2, inv01, inv12, mask, mask, mask))
    bench("chain_marginals", _kernels.chain_marginals_numpy,
          _kernels.chain_marginals_numba, (rho, *w))

    F = rho * rng.uniform(0.5, 1.5, size=rho.shape)
    b0 = rng.normal(size=(n, n))
    b1 = rng.normal(size=(n, n))
    b2 = rng.normal(size=(n, n))
    c01 = rng.normal(size=n)
    c12 = rng.normal(size=n)
    delta = bench("delta_combine", _kernels.delta_combine_numpy,
                  _kernels.delta_combine_numba, (F, rho, b0, b1, b2, c01, c12))
    bench("ratio_extrema", _kernels.ratio_extrema_numpy,
          _kernels.ratio_extrema_numba, (delta, rho))

    print(f"\n4-D kernel benchmark at N={n} per axis ({n**4 / 1e6:.1f}M cells), "
          f"package backend: {_kernels.BACKEND}")
    header = f"{'kernel':<18}{'numpy (s)':>12}{'numba (s)':>12}{'speedup':>10}{'max |diff|':>14}"
    print(header)
    print("-" * len(header))
    for name, t_np, t_nb, speedup, err in rows:
        nb = f"{t_nb:12.4f}" if t_nb == t_nb else f"{'n/a':>12}"
        sp = f"{speedup:10.2f}" if speedup == speedup else f"{'n/a':>10}"
        er = f"{err:14.2e}" if err == err else f"{'n/a':>14}"
        print(f"{name:<18}{t_np:12.4f}{nb}{sp}{er}")


if __name__ == "__main__":
    main()
