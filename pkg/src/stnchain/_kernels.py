"""Hot inner loops, each in a numba and a pure-numpy flavour.

Both flavours take the same pre-drawn random inputs and return identical
outputs, so switching backends never changes a result. The public names at
the bottom of the module dispatch on :data:`stnchain._accel.USE_NUMBA`.
"""
from functools import lru_cache
from itertools import combinations, islice

import numpy as np

from ._accel import USE_NUMBA, njit

_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)

# numpy combination chunks are materialised in blocks of this many rows
_COMB_CHUNK = 1 << 18


# --------------------------------------------------------------------------
# popcount over packed bytes

@njit
def _popcount_numba(packed, table):
    total = 0
    for i in range(packed.shape[0]):
        total += table[packed[i]]
    return total


def popcount_numba(packed):
    return int(_popcount_numba(np.ascontiguousarray(packed, dtype=np.uint8), _POPCOUNT8))


def popcount_numpy(packed):
    return int(np.bitwise_count(np.asarray(packed, dtype=np.uint8)).sum(dtype=np.int64))


# --------------------------------------------------------------------------
# one link of the prepare-and-measure chain

@njit
def _sift_link_numba(u_send, u_recv, bits, u_noise, p_x, q):
    n = u_send.shape[0]
    mask = np.zeros(n, dtype=np.uint8)
    nz = 0
    nx = 0
    for i in range(n):
        sx = u_send[i] < p_x
        rx = u_recv[i] < p_x
        if sx == rx:
            mask[i] = 1
            if sx:
                nx += 1
            else:
                nz += 1
    z_send = np.empty(nz, dtype=np.uint8)
    z_err = np.empty(nz, dtype=np.uint8)
    x_send = np.empty(nx, dtype=np.uint8)
    x_err = np.empty(nx, dtype=np.uint8)
    iz = 0
    ix = 0
    for i in range(n):
        if mask[i] == 0:
            continue
        e = np.uint8(1) if u_noise[i] < q else np.uint8(0)
        if u_send[i] < p_x:
            x_send[ix] = bits[i]
            x_err[ix] = e
            ix += 1
        else:
            z_send[iz] = bits[i]
            z_err[iz] = e
            iz += 1
    return mask, z_send, z_err, x_send, x_err


def sift_link_numba(u_send, u_recv, bits, u_noise, p_x, q):
    return _sift_link_numba(u_send, u_recv, bits, u_noise, float(p_x), float(q))


def sift_link_numpy(u_send, u_recv, bits, u_noise, p_x, q):
    sx = u_send < p_x
    rx = u_recv < p_x
    keep = sx == rx
    err = (u_noise < q).astype(np.uint8)
    zsel = keep & ~sx
    xsel = keep & sx
    return keep.astype(np.uint8), bits[zsel], err[zsel], bits[xsel], err[xsel]


# --------------------------------------------------------------------------
# exhaustive subset enumeration: histogram of ones landing in t

@njit
def _subset_histogram_numba(qbits, m):
    n = qbits.shape[0]
    hist = np.zeros(m + 1, dtype=np.int64)
    idx = np.arange(m)
    while True:
        j = 0
        for k in range(m):
            j += qbits[idx[k]]
        hist[j] += 1
        # next combination in lexicographic order
        k = m - 1
        while k >= 0 and idx[k] == n - m + k:
            k -= 1
        if k < 0:
            break
        idx[k] += 1
        for r in range(k + 1, m):
            idx[r] = idx[r - 1] + 1
    return hist


def subset_histogram_numba(qbits, m):
    return _subset_histogram_numba(np.ascontiguousarray(qbits, dtype=np.int64), int(m))


@lru_cache(maxsize=64)
def _combination_table(n, m):
    return np.array(list(combinations(range(n), m)), dtype=np.int64).reshape(-1, m)


def subset_histogram_numpy(qbits, m):
    qbits = np.asarray(qbits, dtype=np.int64)
    n = qbits.shape[0]
    hist = np.zeros(m + 1, dtype=np.int64)
    if n <= 24:
        counts = qbits[_combination_table(n, m)].sum(axis=1)
        return np.bincount(counts, minlength=m + 1).astype(np.int64)
    it = combinations(range(n), m)
    while True:
        block = np.array(list(islice(it, _COMB_CHUNK)), dtype=np.int64)
        if block.size == 0:
            break
        hist += np.bincount(qbits[block.reshape(-1, m)].sum(axis=1), minlength=m + 1)
    return hist


# --------------------------------------------------------------------------
# random subsets by partial Fisher-Yates, driven by pre-drawn uniforms

@njit
def _sample_weights_numba(qbits, uniforms):
    n = qbits.shape[0]
    trials, m = uniforms.shape
    out = np.empty(trials, dtype=np.int64)
    perm = np.empty(n, dtype=np.int64)
    for t in range(trials):
        for i in range(n):
            perm[i] = i
        ones = 0
        for i in range(m):
            j = i + int(uniforms[t, i] * (n - i))
            if j > n - 1:
                j = n - 1
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
            ones += qbits[perm[i]]
        out[t] = ones
    return out


def sample_weights_numba(qbits, uniforms):
    return _sample_weights_numba(
        np.ascontiguousarray(qbits, dtype=np.int64),
        np.ascontiguousarray(uniforms, dtype=np.float64),
    )


def sample_weights_numpy(qbits, uniforms):
    qbits = np.asarray(qbits, dtype=np.int64)
    n = qbits.shape[0]
    trials, m = uniforms.shape
    perm = np.tile(np.arange(n, dtype=np.int64), (trials, 1))
    rows = np.arange(trials)
    for i in range(m):
        j = i + (uniforms[:, i] * (n - i)).astype(np.int64)
        np.minimum(j, n - 1, out=j)
        a = perm[rows, i].copy()
        perm[rows, i] = perm[rows, j]
        perm[rows, j] = a
    return qbits[perm[:, :m]].sum(axis=1)


# --------------------------------------------------------------------------
# odd-parity counting for independent Bernoulli link errors

@njit
def _odd_parity_count_numba(uniforms, q):
    rows, links = uniforms.shape
    odd = 0
    for r in range(rows):
        par = 0
        for k in range(links):
            if uniforms[r, k] < q:
                par ^= 1
        odd += par
    return odd


def odd_parity_count_numba(uniforms, q):
    return int(_odd_parity_count_numba(uniforms, float(q)))


def odd_parity_count_numpy(uniforms, q):
    return int(((uniforms < q).sum(axis=1) & 1).sum())


if USE_NUMBA:
    popcount = popcount_numba
    sift_link = sift_link_numba
    subset_histogram = subset_histogram_numba
    sample_weights = sample_weights_numba
    odd_parity_count = odd_parity_count_numba
else:
    popcount = popcount_numpy
    sift_link = sift_link_numpy
    subset_histogram = subset_histogram_numpy
    sample_weights = sample_weights_numpy
    odd_parity_count = odd_parity_count_numpy
