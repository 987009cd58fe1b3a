"""Privacy amplification with random binary Toeplitz matrices.

An l x n Toeplitz matrix is fixed by its n + l - 1 seed bits,
T[i, j] = seed[i - j + n - 1]. Multiplication over GF(2) is an integer
convolution reduced mod 2, done with FFTs so n can reach millions.
"""
from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve


def toeplitz_matrix(seed_bits: np.ndarray, n: int, out_len: int) -> np.ndarray:
    """Dense l x n matrix for small sizes; reference for :func:`toeplitz_hash`."""
    seed_bits = np.asarray(seed_bits, dtype=np.uint8)
    if seed_bits.size != n + out_len - 1:
        raise ValueError(f"seed must have n + l - 1 = {n + out_len - 1} bits")
    i = np.arange(out_len)[:, None]
    j = np.arange(n)[None, :]
    return seed_bits[i - j + n - 1]


def toeplitz_hash(bits: np.ndarray, seed_bits: np.ndarray, out_len: int) -> np.ndarray:
    """GF(2) product T x for the Toeplitz matrix seeded by ``seed_bits``."""
    bits = np.asarray(bits, dtype=np.uint8)
    seed_bits = np.asarray(seed_bits, dtype=np.uint8)
    n = bits.size
    if out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    if seed_bits.size != n + out_len - 1:
        raise ValueError(f"seed must have n + l - 1 = {n + out_len - 1} bits")
    conv = fftconvolve(seed_bits.astype(np.float64), bits.astype(np.float64))[n - 1 : n - 1 + out_len]
    rounded = np.rint(conv)
    if conv.size and np.max(np.abs(conv - rounded)) > 0.25:
        raise FloatingPointError("FFT convolution lost integer precision")
    return (rounded.astype(np.int64) & 1).astype(np.uint8)


def draw_seed(rng: np.random.Generator, n: int, out_len: int) -> np.ndarray:
    if out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    return rng.integers(0, 2, size=n + out_len - 1, dtype=np.uint8)


def collision_fraction(x: np.ndarray, y: np.ndarray, out_len: int, n_matrices: int, rng: np.random.Generator) -> float:
    """Fraction of random Toeplitz matrices mapping distinct inputs x and y together."""
    x = np.asarray(x, dtype=np.uint8)
    y = np.asarray(y, dtype=np.uint8)
    n = x.size
    if y.size != n or np.array_equal(x, y):
        raise ValueError("x and y must be distinct strings of equal length")
    d = (x ^ y).astype(np.int64)
    idx = np.arange(out_len)[:, None] - np.arange(n)[None, :] + n - 1
    collisions = 0
    for start in range(0, n_matrices, 8192):
        rows = min(8192, n_matrices - start)
        seeds = rng.integers(0, 2, size=(rows, n + out_len - 1), dtype=np.int64)
        # T(x) == T(y)  <=>  T(x ^ y) == 0
        images = (seeds[:, idx] @ d) & 1
        collisions += int((~images.any(axis=1)).sum())
    return collisions / n_matrices
