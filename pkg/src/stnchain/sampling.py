"""Classical sampling strategies behind the STN parameter estimate.

The STN strategy observes the XOR of all parties' strings on a random subset
t and uses its relative weight to guess the weight of the same XOR outside t.
Because only the folded string matters, every question here reduces to the
Hamming-weight strategy on that folded string.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .bitmath import BitString, IndexSubset, relative_weight, xor_fold
from .errors import InstanceTooLargeError
from .stats import Estimate, trial_rng, wilson_interval

MAX_ENUMERATED_SUBSETS = 10**8

# relative slack on the delta comparison so that a difference landing exactly
# on delta (e.g. delta=0.3 written in binary) counts as good
_DELTA_SLACK = 1e-9

_MC_CHUNK = 2048


@dataclass(frozen=True)
class SamplingInstance:
    """Segments (r0, l1, r1, ..., lp, rp, l_{p+1}), all of length N."""

    segments: tuple
    p: int
    delta: float
    m: int

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if self.p < 0:
            raise ValueError("p must be non-negative")
        if len(segs) != 2 * self.p + 2:
            raise ValueError(f"expected {2 * self.p + 2} segments for p={self.p}, got {len(segs)}")
        n = len(segs[0])
        if any(len(s) != n for s in segs):
            raise ValueError("all segments must share one length")
        if not 0 < self.m <= n // 2:
            raise ValueError(f"need 0 < m <= N/2, got m={self.m}, N={n}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @classmethod
    def from_folded(cls, folded: BitString, p: int, delta: float, m: int) -> "SamplingInstance":
        """Instance whose fold is ``folded``: Alice holds it, everyone else holds zeros."""
        zeros = BitString.zeros(len(folded))
        return cls((folded,) + (zeros,) * (2 * p + 1), p, delta, m)

    @property
    def N(self) -> int:
        return len(self.segments[0])

    def folded(self) -> BitString:
        return xor_fold(self.segments)


def _fails(ones_in_t, weight, N, m, delta):
    """Vectorised |w(q_t) - w(q_-t)| > delta, compared on integers scaled by m(N-m)."""
    ones_in_t = np.asarray(ones_in_t, dtype=np.int64)
    diff = np.abs(ones_in_t * (N - m) - (weight - ones_in_t) * m)
    return diff > delta * m * (N - m) * (1.0 + _DELTA_SLACK)


def good_word_membership(inst: SamplingInstance, t: IndexSubset) -> bool:
    """True iff the folded string's weight on t is within delta of its weight off t."""
    if len(t) != inst.m or t.parent_length != inst.N:
        raise ValueError(f"subset must have size m={inst.m} inside length {inst.N}")
    q = inst.folded()
    j = q.take(t).weight()
    return not bool(_fails(j, q.weight(), inst.N, inst.m, inst.delta))


def hamming_membership(q: BitString, t: IndexSubset, delta: float) -> bool:
    """Plain Hamming-weight strategy: |w(q_t) - w(q_-t)| <= delta."""
    a = relative_weight(q.take(t))
    b = relative_weight(q.take(t.complement()))
    return abs(a - b) <= delta * (1.0 + _DELTA_SLACK)


def analytic_failure_bound(N: int, m: int, delta: float) -> float:
    """min(1, 2 exp(-delta^2 m N / (N+2)))."""
    if not 0 < m <= N / 2:
        raise ValueError(f"need 0 < m <= N/2, got m={m}, N={N}")
    if not delta > 0:
        raise ValueError("delta must be positive")
    return min(1.0, 2.0 * math.exp(-delta * delta * m * N / (N + 2)))


def _check_enumerable(N, m, limit):
    n_sub = math.comb(N, m)
    if n_sub > limit:
        raise InstanceTooLargeError(f"C({N},{m}) = {n_sub} subsets exceeds the limit {limit}")
    return n_sub


def _failure_count(qbits, m, delta):
    N = qbits.size
    hist = _kernels.subset_histogram(qbits, m)
    weight = int(qbits.sum())
    bad = _fails(np.arange(m + 1), weight, N, m, delta)
    return int(hist[bad].sum()), int(hist.sum())


def exact_failure_fraction(inst: SamplingInstance, max_subsets: int = MAX_ENUMERATED_SUBSETS) -> Fraction:
    _check_enumerable(inst.N, inst.m, max_subsets)
    bad, total = _failure_count(inst.folded().bits, inst.m, inst.delta)
    return Fraction(bad, total)


def exact_failure_probability(inst: SamplingInstance, max_subsets: int = MAX_ENUMERATED_SUBSETS) -> float:
    """Fraction of all size-m subsets for which the instance is not a good word."""
    return float(exact_failure_fraction(inst, max_subsets))


def failure_by_weight(N: int, m: int, delta: float, max_subsets: int = MAX_ENUMERATED_SUBSETS) -> np.ndarray:
    """Exact failure probability for a representative folded word of each weight 0..N."""
    if not 0 < m <= N // 2:
        raise ValueError(f"need 0 < m <= N/2, got m={m}, N={N}")
    _check_enumerable(N, m, max_subsets)
    out = np.empty(N + 1)
    for k in range(N + 1):
        rep = np.zeros(N, dtype=np.uint8)
        rep[:k] = 1
        bad, total = _failure_count(rep, m, delta)
        out[k] = bad / total
    return out


def worst_case_failure(N: int, m: int, delta: float, p: int = 0, max_subsets: int = MAX_ENUMERATED_SUBSETS) -> float:
    """Maximum failure probability over all words, via the N+1 weight classes.

    ``p`` does not change the answer; the STN failure depends only on the
    folded string. It is accepted so calls mirror the chain being audited.
    """
    if p < 0:
        raise ValueError("p must be non-negative")
    return float(failure_by_weight(N, m, delta, max_subsets).max())


def mc_failure_estimate(
    inst: SamplingInstance,
    trials: int,
    seed: int,
    confidence: float = 0.99,
    workers: int = 1,
) -> Estimate:
    """Monte Carlo failure fraction over uniformly random size-m subsets.

    Trial ``i`` draws its subset from the stream (seed, i), so the result does
    not depend on chunking or on ``workers``.
    """
    if trials < 1000:
        raise ValueError("mc_failure_estimate needs at least 1000 trials")
    q = inst.folded()
    qbits = q.bits.astype(np.int64)
    weight = int(qbits.sum())
    N, m = inst.N, inst.m

    def run_chunk(start):
        stop = min(start + _MC_CHUNK, trials)
        u = np.empty((stop - start, m))
        for row, i in enumerate(range(start, stop)):
            u[row] = trial_rng(seed, i).random(m)
        ones = _kernels.sample_weights(qbits, u)
        return int(_fails(ones, weight, N, m, inst.delta).sum())

    starts = range(0, trials, _MC_CHUNK)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            failures = sum(ex.map(run_chunk, starts))
    else:
        failures = sum(map(run_chunk, starts))
    return wilson_interval(failures, trials, confidence)


def random_subset(N: int, m: int, rng: np.random.Generator) -> IndexSubset:
    return IndexSubset(np.sort(rng.choice(N, size=m, replace=False)), N)


def balanced_word(N: int, weight: int | None = None) -> BitString:
    """Representative folded word with ``weight`` leading ones (default N/2)."""
    k = N // 2 if weight is None else weight
    bits = np.zeros(N, dtype=np.uint8)
    bits[:k] = 1
    return BitString.from_bits(bits)


def segments_from_bits(strings: Sequence[str]) -> tuple:
    return tuple(BitString.from_str(s) for s in strings)
