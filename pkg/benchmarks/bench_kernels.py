"""Time each hot kernel under numba and under the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both variants are called directly, so the STNCHAIN_DISABLE_NUMBA flag does
not matter here. The first numba call is a warm-up and is not timed.
"""
import argparse
import timeit

import numpy as np

from stnchain import _kernels
from stnchain._accel import NUMBA_AVAILABLE


def cases(rng):
    n = 1_000_000
    packed = rng.integers(0, 256, n // 8, dtype=np.uint8)
    sift = (rng.random(n), rng.random(n), rng.integers(0, 2, n, dtype=np.uint8), rng.random(n), 0.2, 0.02)
    qbits = np.zeros(18, dtype=np.uint8)
    qbits[:9] = 1
    word = np.zeros(1000, dtype=np.int64)
    word[:500] = 1
    uniforms = rng.random((2000, 500))
    parity = rng.random((1 << 20, 4))
    return {
        "popcount (1e6 bits)": ("popcount", (packed,)),
        "sift_link (N=1e6)": ("sift_link", sift),
        "subset_histogram (C(18,9))": ("subset_histogram", (qbits, 9)),
        "sample_weights (2000 x m=500)": ("sample_weights", (word, uniforms)),
        "odd_parity_count (2^20 x 4)": ("odd_parity_count", (parity, 0.02)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'kernel':<32} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for label, (name, inputs) in cases(rng).items():
        np_fn = getattr(_kernels, f"{name}_numpy")
        t_np = min(timeit.repeat(lambda: np_fn(*inputs), number=1, repeat=args.repeat))
        if NUMBA_AVAILABLE:
            nb_fn = getattr(_kernels, f"{name}_numba")
            nb_fn(*inputs)
            t_nb = min(timeit.repeat(lambda: nb_fn(*inputs), number=1, repeat=args.repeat))
            print(f"{label:<32} {t_np * 1e3:>11.2f} {t_nb * 1e3:>11.2f} {t_np / t_nb:>7.1f}x")
        else:
            print(f"{label:<32} {t_np * 1e3:>11.2f} {'n/a':>11} {'':>8}")


if __name__ == "__main__":
    main()
