import math

import numpy as np
import pytest

from stnchain.errors import InfeasibleParametersError
from stnchain.params import (
    ProtocolParams,
    abort_budget,
    derive_sizes,
    failure_bound,
    failure_probability,
    hoeffding_width,
    pa_epsilon,
)

import oracles


def test_beta_and_n_tilde_at_one_million():
    s = derive_sizes(ProtocolParams(N=10**6, p=2, Q=0.02))
    ref = oracles.sizes(10**6, "0.2", "1e-10", "1e-30", "1e-10")
    assert s.beta == pytest.approx(3.444e-3, abs=5e-7)
    assert s.n_tilde == pytest.approx(676_556, abs=1)
    for key in ("beta", "n_tilde", "beta_prime", "delta", "mu"):
        assert getattr(s, key) == pytest.approx(float(ref[key]), rel=1e-12)
    assert s.m0_real == pytest.approx(float(ref["m0"]), rel=1e-12)
    assert s.n0_real == pytest.approx(float(ref["n0"]), rel=1e-12)
    assert (s.m0, s.n0) == (math.floor(ref["m0"]), math.floor(ref["n0"]))


def test_abort_budget_to_one_limit():
    N = 10**6
    s = derive_sizes(ProtocolParams(N=N, p=1, Q=0.0, eps_abort=1 - 1e-15))
    assert s.beta == pytest.approx(math.sqrt(math.log(2) / (2 * N)), rel=1e-9)
    assert s.n_tilde / N == pytest.approx(0.68 - s.beta, rel=1e-12)


def test_small_n_is_infeasible():
    with pytest.raises(InfeasibleParametersError):
        derive_sizes(ProtocolParams(N=100, p=1, Q=0.02))
    # the claimed mechanism: beta ~ 0.344 drives m0 negative
    assert hoeffding_width(100, 1e-10) == pytest.approx(0.344, abs=1e-3)


@pytest.mark.parametrize(
    "kwargs",
    [dict(N=0), dict(p=-1), dict(Q=0.5), dict(Q=-0.1), dict(p_X=0.0), dict(p_X=0.6), dict(eps=0.0), dict(eps_abort=1.0)],
)
def test_param_validation(kwargs):
    base = dict(N=1000, p=1, Q=0.01)
    base.update(kwargs)
    with pytest.raises(ValueError):
        ProtocolParams(**base)


def test_failure_probability():
    assert failure_bound(0.0, 5) == 0.0
    assert failure_bound(1e-30, 2) == pytest.approx(2e-10 + 6e-30, rel=1e-12)
    assert failure_bound(1.0, 0) == 1.0
    assert failure_probability(ProtocolParams(N=10, p=2, Q=0.0)) == pytest.approx(2e-10, rel=1e-12)
    assert abort_budget(ProtocolParams(N=10, p=2, Q=0.0)) == pytest.approx(6e-10)


def test_pa_epsilon():
    assert pa_epsilon(0.0) == 0.0
    assert pa_epsilon(1e-30) == pytest.approx(4e-15, rel=1e-12)
    assert pa_epsilon(0.01) == pytest.approx(0.49, rel=1e-14)
    with pytest.raises(ValueError):
        pa_epsilon(2.0)


def test_beta_decreases_in_n():
    betas = [derive_sizes(ProtocolParams(N=int(N), p=1, Q=0.01)).beta for N in np.logspace(5, 12, 30)]
    assert all(a > b for a, b in zip(betas, betas[1:]))


def test_delta_and_mu_decrease_with_block_sizes():
    sizes = [derive_sizes(ProtocolParams(N=int(N), p=1, Q=0.01)) for N in np.logspace(5, 12, 30)]
    m0s = [s.m0_real for s in sizes]
    assert all(a < b for a, b in zip(m0s, m0s[1:]))
    deltas = [s.delta for s in sizes]
    mus = [s.mu for s in sizes]
    assert all(a > b for a, b in zip(deltas, deltas[1:]))
    assert all(a > b for a, b in zip(mus, mus[1:]))


@pytest.mark.parametrize("px", [0.1, 0.2, 0.35, 0.5])
@pytest.mark.parametrize("N", [10**6, 10**8, 10**10])
def test_block_size_consistency(px, N):
    s = derive_sizes(ProtocolParams(N=N, p=1, Q=0.01, p_X=px))
    assert s.N0 == s.m0 + s.n0
    assert abs(s.N0_real - s.n_tilde * (1 - 2 * s.beta_prime)) <= 1e-6 * s.N0_real
    assert abs(s.N0 - s.n_tilde * (1 - 2 * s.beta_prime)) <= 2.0


@pytest.mark.parametrize("N", [10**5, 10**6, 10**9, 10**12])
@pytest.mark.parametrize("eps", [1e-30, 1e-10, 1e-3])
def test_delta_inverts_sampling_bound(N, eps):
    s = derive_sizes(ProtocolParams(N=N, p=2, Q=0.01, eps=eps))
    raw = 2 * math.exp(-(s.delta**2) * s.m0_real * s.N0_real / (s.N0_real + 2))
    assert raw == pytest.approx(eps**2, rel=1e-9)


def test_replace_revalidates():
    p = ProtocolParams(N=10**6, p=2, Q=0.02)
    assert p.replace(Q=0.03).Q == 0.03
    with pytest.raises(ValueError):
        p.replace(Q=0.7)
