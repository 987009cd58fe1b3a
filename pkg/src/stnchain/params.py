"""Protocol parameters and the block sizes the security reduction produces."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import InfeasibleParametersError

LN2 = math.log(2.0)

DEFAULT_EPS = 1e-30
DEFAULT_EPS_ABORT = 1e-10
DEFAULT_EPS_PRIME = 1e-10
DEFAULT_PX = 0.2


@dataclass(frozen=True)
class ProtocolParams:
    """User-chosen inputs for one key establishment.

    ``N`` is the number of signals per link, ``p`` the number of simplified
    trusted nodes, ``Q`` the per-link bit-flip probability and ``p_X`` the
    X-basis bias. The three epsilons are the sampling/security parameter,
    the abort budget and the failure budget of the regular-TN baseline.
    """

    N: int
    p: int
    Q: float
    p_X: float = DEFAULT_PX
    eps: float = DEFAULT_EPS
    eps_abort: float = DEFAULT_EPS_ABORT
    eps_prime: float = DEFAULT_EPS_PRIME

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if int(self.p) != self.p or self.p < 0:
            raise ValueError(f"p must be a non-negative integer, got {self.p!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "p", int(self.p))
        if not 0.0 <= self.Q < 0.5:
            raise ValueError(f"Q must lie in [0, 0.5), got {self.Q!r}")
        if not 0.0 < self.p_X <= 0.5:
            raise ValueError(f"p_X must lie in (0, 0.5], got {self.p_X!r}")
        for name in ("eps", "eps_abort", "eps_prime"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v!r}")

    def replace(self, **changes) -> "ProtocolParams":
        d = asdict(self)
        d.update(changes)
        return ProtocolParams(**d)


@dataclass(frozen=True)
class DerivedSizes:
    """Reduction-derived block sizes.

    ``m0`` and ``n0`` are floored counts; ``m0_real``/``n0_real`` keep the
    unfloored values, which are what ``delta`` and ``mu`` are computed from.
    """

    N: int
    beta: float
    n_tilde: float
    beta_prime: float
    m0_real: float
    n0_real: float
    m0: int
    n0: int
    N0: int
    N0_real: float
    delta: float
    mu: float


def hoeffding_width(count: float, eps_abort: float) -> float:
    """sqrt(ln(2/eps_abort) / (2 count))."""
    return math.sqrt((LN2 - math.log(eps_abort)) / (2.0 * count))


def sampling_delta(m0: float, N0: float, eps: float) -> float:
    """Tolerance delta that makes the sampling failure bound equal eps**2."""
    # ln(2/eps^2) written to survive eps far below 1e-154
    return math.sqrt((N0 + 2.0) / (m0 * N0) * (LN2 - 2.0 * math.log(eps)))


def tn_mu(m0: float, n0: float, eps_prime: float) -> float:
    return math.sqrt((n0 + m0) / (n0 * m0) * (m0 + 1.0) / m0 * (LN2 - math.log(eps_prime)))


def sifted_fraction(p_x: float) -> float:
    """Probability that sender and receiver bases agree."""
    return 1.0 - 2.0 * p_x * (1.0 - p_x)


def derive_sizes(params: ProtocolParams) -> DerivedSizes:
    """Compute beta, N~, beta', m0, n0, N0, delta and mu, in that order.

    Raises InfeasibleParametersError when N~, m0 or n0 is not positive.
    """
    N = params.N
    beta = hoeffding_width(N, params.eps_abort)
    keep = sifted_fraction(params.p_X) - beta
    n_tilde = N * keep
    if n_tilde <= 0:
        raise InfeasibleParametersError(f"N~ = {n_tilde:.6g} <= 0; N={N} too small")
    beta_prime = hoeffding_width(n_tilde, params.eps_abort)
    x_share = params.p_X**2 / keep
    m0_real = n_tilde * (x_share - beta_prime)
    n0_real = n_tilde * (1.0 - x_share - beta_prime)
    if m0_real <= 0 or n0_real <= 0:
        raise InfeasibleParametersError(
            f"m0 = {m0_real:.6g}, n0 = {n0_real:.6g}; N={N} too small for eps_abort={params.eps_abort:g}"
        )
    m0 = math.floor(m0_real)
    n0 = math.floor(n0_real)
    if m0 < 1 or n0 < 1:
        raise InfeasibleParametersError(f"floored block sizes m0={m0}, n0={n0} are empty")
    N0_real = m0_real + n0_real
    return DerivedSizes(
        N=N,
        beta=beta,
        n_tilde=n_tilde,
        beta_prime=beta_prime,
        m0_real=m0_real,
        n0_real=n0_real,
        m0=m0,
        n0=n0,
        N0=m0 + n0,
        N0_real=N0_real,
        delta=sampling_delta(m0_real, N0_real, params.eps),
        mu=tn_mu(m0_real, n0_real, params.eps_prime),
    )


def observed_sizes(params: ProtocolParams, m0_obs: int, n0_obs: int) -> DerivedSizes:
    """Sizes for a concrete run: delta and mu from the observed block counts."""
    if m0_obs < 1 or n0_obs < 1:
        raise InfeasibleParametersError(f"observed m0={m0_obs}, n0={n0_obs} must be positive")
    N = params.N
    beta = hoeffding_width(N, params.eps_abort)
    n_tilde = N * (sifted_fraction(params.p_X) - beta)
    N0 = m0_obs + n0_obs
    return DerivedSizes(
        N=N,
        beta=beta,
        n_tilde=n_tilde,
        beta_prime=hoeffding_width(n_tilde, params.eps_abort) if n_tilde > 0 else math.inf,
        m0_real=float(m0_obs),
        n0_real=float(n0_obs),
        m0=int(m0_obs),
        n0=int(n0_obs),
        N0=N0,
        N0_real=float(N0),
        delta=sampling_delta(m0_obs, N0, params.eps),
        mu=tn_mu(m0_obs, n0_obs, params.eps_prime),
    )


def failure_bound(eps: float, p: int) -> float:
    """2 eps^(1/3) + 2 (p+1) eps, clamped to 1."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps!r}")
    return min(1.0, 2.0 * eps ** (1.0 / 3.0) + 2.0 * (p + 1) * eps)


def failure_probability(params: ProtocolParams) -> float:
    """Overall STN failure probability for ``params``."""
    return failure_bound(params.eps, params.p)


def abort_budget(params: ProtocolParams) -> float:
    """Reduction failure from the abort steps, 2 (p+1) eps_abort, clamped to 1.

    Reported alongside :func:`failure_probability`; the two are not merged.
    """
    return min(1.0, 2.0 * (params.p + 1) * params.eps_abort)


def pa_epsilon(eps: float) -> float:
    """Privacy-amplification distance 9 eps + 4 sqrt(eps)."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps!r}")
    return 9.0 * eps + 4.0 * math.sqrt(eps)
