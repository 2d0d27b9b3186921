"""Numba vs numpy timings for the full-enumeration kernels.

    python3 benchmarks/bench_kernels.py [--sizes 12 16 20] [--repeat 5]
"""
import argparse
import time

import numpy as np

from qagibbs import _accel, kernels
from qagibbs.instances import generate_instance


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def random_model(n, rng, density=0.3):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    ei = np.array([p[0] for p in pairs], dtype=np.int64)
    ej = np.array([p[1] for p in pairs], dtype=np.int64)
    jv = rng.choice((-1, 1), size=len(pairs)).astype(np.int64)
    h = rng.choice((-1, 0, 1), size=n).astype(np.int64)
    return ei, ej, jv, h


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[12, 16, 20])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    # warm up the jit so compile time stays out of the numbers
    model, _ = generate_instance(rng)
    kernels.energies_numba(model.n, *model.edge_arrays())
    kernels.tv_counts_numba(np.zeros(4, dtype=np.int64), np.full(4, 0.25), 1)

    print(f"{'kernel':<12}{'n':>4}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for n in args.sizes:
        ei, ej, jv, h = random_model(n, rng)
        e_np = kernels.energies_numpy(n, ei, ej, jv, h)
        e_nb = kernels.energies_numba(n, ei, ej, jv, h)
        assert np.array_equal(e_np, e_nb)
        t_np = best_of(lambda: kernels.energies_numpy(n, ei, ej, jv, h), args.repeat)
        t_nb = best_of(lambda: kernels.energies_numba(n, ei, ej, jv, h), args.repeat)
        print(f"{'energies':<12}{n:>4}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>10.1f}")

        probs = rng.dirichlet(np.ones(1 << n))
        m = 1_000_000
        counts = rng.multinomial(m, probs)
        t_np = best_of(lambda: kernels.tv_counts_numpy(counts, probs, m), args.repeat)
        t_nb = best_of(lambda: kernels.tv_counts_numba(counts, probs, m), args.repeat)
        print(f"{'tv_counts':<12}{n:>4}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
