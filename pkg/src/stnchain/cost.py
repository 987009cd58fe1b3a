"""Cost per secret key bit for STN and regular TN chains.

EC(N, noise) prices one error-correction plus privacy-amplification run and
c(N) is the authentication key spent per STN per establishment. Both are
pluggable; the defaults are EC(N, .) = N and c(N) = log2 N.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .errors import InfeasibleCostError, InfeasibleParametersError, PoolExhaustedError
from .params import ProtocolParams, derive_sizes
from .rates import stn_key_length, stn_total_noise, tn_key_length


def linear_ec_cost(N: float, noise: float) -> float:
    return float(N)


def log_auth_cost(N: float) -> float:
    return math.log2(N)


@dataclass(frozen=True)
class CostModel:
    ec_cost_fn: Callable[[float, float], float] = field(default=linear_ec_cost)
    auth_cost_fn: Callable[[float], float] = field(default=log_auth_cost)
    # None means k = l_BB84(N, Q) for the parameters being evaluated
    initial_pool: Optional[float] = None
    ec_efficiency: float = 1.0


@dataclass(frozen=True)
class CostResult:
    N: int
    p: int
    Q: float
    w_total: float
    l_stn: int
    l_tn: int
    cN: float
    J: Optional[float]
    cost_tn: Optional[float]
    cost_stn: Optional[float]
    tn_feasible: bool
    stn_feasible: bool
    reason: str = ""


def _ec(model, N, noise):
    v = model.ec_cost_fn(N, noise)
    if v < 0:
        raise ValueError(f"EC cost must be non-negative, got {v!r}")
    return v


def _tn_length(params, model, sizes=None):
    try:
        sizes = sizes or derive_sizes(params)
    except InfeasibleParametersError:
        return 0
    return tn_key_length(sizes, params.Q, params.eps_prime, model.ec_efficiency).key_length_clamped


def _stn_length(params, model, sizes=None):
    try:
        sizes = sizes or derive_sizes(params)
    except InfeasibleParametersError:
        return 0
    w = stn_total_noise(params.Q, params.p)
    return stn_key_length(sizes, w, params.eps, model.ec_efficiency).key_length_clamped


def cost_tn(params: ProtocolParams, model: CostModel = CostModel()) -> float:
    """(2p+2) EC(N, Q) / l_TN."""
    ell = _tn_length(params, model)
    if ell <= 0:
        raise InfeasibleCostError(f"l_TN = {ell}: no TN key at N={params.N}, Q={params.Q}")
    return (2 * params.p + 2) * _ec(model, params.N, params.Q) / ell


def refresh_interval(params: ProtocolParams, model: CostModel = CostModel()) -> float:
    """Establishments J an STN can serve before refreshing: (k - c(N)) / c(N)."""
    c = model.auth_cost_fn(params.N)
    if c <= 0:
        raise ValueError(f"c(N) must be positive, got {c!r}")
    k = model.initial_pool if model.initial_pool is not None else _tn_length(params, model)
    if k <= c:
        raise PoolExhaustedError(f"key pool k={k} does not exceed c(N)={c:.6g}")
    return (k - c) / c


def cost_stn(params: ProtocolParams, model: CostModel = CostModel()) -> float:
    """(2J EC(N, w) + (2p+2) EC(N, Q)) / (J l_STN) with w the total chain noise."""
    ell = _stn_length(params, model)
    if ell <= 0:
        raise InfeasibleCostError(f"l_STN = {ell}: no STN key at N={params.N}, Q={params.Q}, p={params.p}")
    J = refresh_interval(params, model)
    if J < 1:
        raise InfeasibleCostError(f"refresh interval J={J:.6g} < 1")
    w = stn_total_noise(params.Q, params.p)
    # divided through by J so a very large pool cannot overflow the numerator
    return (2 * _ec(model, params.N, w) + (2 * params.p + 2) * _ec(model, params.N, params.Q) / J) / ell


def evaluate_costs(params: ProtocolParams, model: CostModel = CostModel()) -> CostResult:
    """Both costs plus the intermediate terms; infeasible sides carry None."""
    try:
        sizes = derive_sizes(params)
    except InfeasibleParametersError:
        sizes = None
    l_tn = _tn_length(params, model, sizes) if sizes else 0
    l_stn = _stn_length(params, model, sizes) if sizes else 0
    reasons = []
    c_tn = c_stn = J = None
    try:
        c_tn = cost_tn(params, model)
    except InfeasibleCostError as exc:
        reasons.append(f"tn: {exc}")
    try:
        J = refresh_interval(params, model)
    except PoolExhaustedError as exc:
        reasons.append(f"pool: {exc}")
    try:
        c_stn = cost_stn(params, model)
    except InfeasibleCostError as exc:
        if not isinstance(exc, PoolExhaustedError):
            reasons.append(f"stn: {exc}")
    return CostResult(
        N=params.N,
        p=params.p,
        Q=params.Q,
        w_total=stn_total_noise(params.Q, params.p),
        l_stn=l_stn,
        l_tn=l_tn,
        cN=model.auth_cost_fn(params.N),
        J=J,
        cost_tn=c_tn,
        cost_stn=c_stn,
        tn_feasible=c_tn is not None,
        stn_feasible=c_stn is not None,
        reason="; ".join(reasons),
    )


def cost_crossover(params: ProtocolParams, Q_grid: Iterable[float], model: CostModel = CostModel()) -> Optional[float]:
    """Smallest grid Q where the STN chain stops being cheaper than the TN chain.

    A grid point counts as crossed when the STN cost is undefined or
    C_STN >= C_TN. Returns None if no grid point qualifies.
    """
    for Q in Q_grid:
        r = evaluate_costs(params.replace(Q=float(Q)), model)
        if not r.stn_feasible:
            return float(Q)
        if r.tn_feasible and r.cost_stn >= r.cost_tn:
            return float(Q)
    return None
