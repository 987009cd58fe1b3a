"""Closed-form finite-key lengths for STN and regular TN chains."""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import bisect

from .bitmath import binary_entropy
from .params import DerivedSizes


@dataclass(frozen=True)
class KeyRateResult:
    key_length: float
    key_length_clamped: int
    entropy_term: float
    leakage: float
    pa_penalty: float
    effective_noise: float
    per_signal_rate: float
    n0: int

    @property
    def per_sifted_rate(self) -> float:
        """Clamped key length per retained Z-basis bit."""
        return self.key_length_clamped / self.n0 if self.n0 else 0.0

    @property
    def feasible(self) -> bool:
        return self.key_length_clamped > 0


def _check_prob(name, x, hi=1.0):
    if not 0.0 <= x <= hi or math.isnan(x):
        raise ValueError(f"{name} must lie in [0, {hi}], got {x!r}")


def stn_total_noise(Q: float, p: int) -> float:
    """Probability of an odd number of errors over p+1 independent BSC(Q) links."""
    _check_prob("Q", Q, 0.5)
    if int(p) != p or p < 0:
        raise ValueError(f"p must be a non-negative integer, got {p!r}")
    links = p + 1
    if links > 64:
        # comb() outgrows a double for long chains; same quantity, stable form
        if Q == 0.5:
            return 0.5
        return -0.5 * math.expm1(links * math.log1p(-2.0 * Q))
    return sum(
        math.comb(links, 2 * i + 1) * Q ** (2 * i + 1) * (1.0 - Q) ** (p - 2 * i)
        for i in range(math.ceil(links / 2))
    )


def _assemble(n0, N, noise, ec_efficiency, pa_penalty):
    x = min(noise, 0.5)
    h = binary_entropy(x)
    entropy_term = n0 * (1.0 - h)
    leakage = ec_efficiency * n0 * h
    ell = entropy_term - leakage - pa_penalty
    clamped = max(0, math.floor(ell))
    return KeyRateResult(
        key_length=ell,
        key_length_clamped=clamped,
        entropy_term=entropy_term,
        leakage=leakage,
        pa_penalty=pa_penalty,
        effective_noise=noise,
        per_signal_rate=clamped / N,
        n0=n0,
    )


def stn_key_length(sizes: DerivedSizes, w_obs: float, eps: float, ec_efficiency: float = 1.0) -> KeyRateResult:
    """STN key length n0 (1 - h(w+delta)) - leak_EC - 2 log2(1/eps).

    ``w_obs`` is the relative error of the folded X-basis test string. The
    effective noise w_obs + delta is saturated at 0.5 before entering h.
    """
    _check_prob("w_obs", w_obs)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    if ec_efficiency < 0:
        raise ValueError("ec_efficiency must be non-negative")
    return _assemble(sizes.n0, sizes.N, w_obs + sizes.delta, ec_efficiency, -2.0 * math.log2(eps))


def tn_key_length(sizes: DerivedSizes, Q: float, eps_prime: float, ec_efficiency: float = 1.0) -> KeyRateResult:
    """Regular-TN (BB84) key length n0 (1 - h(Q+mu)) - leak_EC - 2 log2(2/eps')."""
    _check_prob("Q", Q)
    if not 0.0 < eps_prime < 1.0:
        raise ValueError(f"eps_prime must lie in (0, 1), got {eps_prime!r}")
    if ec_efficiency < 0:
        raise ValueError("ec_efficiency must be non-negative")
    return _assemble(sizes.n0, sizes.N, Q + sizes.mu, ec_efficiency, 2.0 * (1.0 - math.log2(eps_prime)))


def asymptotic_stn_rate(Q: float, p: int, ec_efficiency: float = 1.0) -> float:
    """N -> infinity STN rate per sifted Z bit, clamped at 0."""
    w = min(stn_total_noise(Q, p), 0.5)
    return max(0.0, 1.0 - (1.0 + ec_efficiency) * binary_entropy(w))


def stn_noise_threshold(sizes: DerivedSizes, eps: float, ec_efficiency: float = 1.0, xtol: float = 1e-12) -> float:
    """Observed error rate at which the (unclamped) STN key length crosses zero.

    Located by bisection on [0, 0.5]; returns 0.0 when no key is possible
    even with a noiseless test string.
    """
    f = lambda w: stn_key_length(sizes, w, eps, ec_efficiency).key_length
    if f(0.0) <= 0:
        return 0.0
    return bisect(f, 0.0, 0.5, xtol=xtol)
