"""Seeded Monte Carlo simulation of a prepare-and-measure STN chain.

Nodes are numbered 0 (Alice) .. p+1 (Bob); link i joins node i (sender) to
node i+1 (receiver). Every random draw comes from its own stream keyed by
(seed, trial, link, stage), so transcripts are reproducible bit for bit and
independent of how trials are scheduled.

Each link is a binary symmetric channel with flip probability Q on every
sifted position, in either basis. Eve is not simulated: the simulator checks
completeness and correctness, security comes from the closed-form bound.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .bitmath import BitString
from .errors import AbortedTranscriptError, GuardError, InfeasibleParametersError
from .params import DerivedSizes, ProtocolParams, derive_sizes, observed_sizes
from .privacy import draw_seed, toeplitz_hash
from .rates import KeyRateResult, stn_key_length
from .stats import Estimate, trial_rng, wilson_interval

MAX_SIM_N = 10**7
ABORT_POLICIES = ("paper-abort", "observe-only")

_NOISE_CHUNK = 1 << 20


class Stage(IntEnum):
    SENDER_BASIS = 0
    RECEIVER_BASIS = 1
    BITS = 2
    NOISE = 3
    PRIVACY_AMPLIFICATION = 4


# stream tag used in place of a link index for end-to-end stages
_END_TO_END = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    params: ProtocolParams
    seed: int = 0
    trials: int = 1
    abort_policy: str = "paper-abort"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.abort_policy not in ABORT_POLICIES:
            raise ValueError(f"abort_policy must be one of {ABORT_POLICIES}")
        if self.params.N > MAX_SIM_N:
            raise GuardError(f"N={self.params.N} exceeds the simulator limit {MAX_SIM_N}")


@dataclass(frozen=True)
class ChainTranscript:
    """Everything one simulated run produced.

    Link-indexed tuples have p+1 entries; STN-indexed tuples have p. Keys and
    test strings are already truncated to ``n0_obs`` / ``m0_obs``.
    ``z_errors``/``x_errors`` are the simulator's ground-truth flip patterns
    (in sifted order, truncated); a real run never sees them.
    """

    N: int
    p: int
    seed: int
    trial: int
    sift_masks: tuple
    sifted_lengths: tuple
    z_counts: tuple
    x_counts: tuple
    n0_obs: int
    m0_obs: int
    z_parities: tuple
    x_parities: tuple
    alice_key: BitString
    alice_test: BitString
    bob_key: BitString
    bob_test: BitString
    w_obs: float
    z_errors: tuple
    x_errors: tuple
    abort_flags: tuple = ()
    aborted: bool = False

    @property
    def sifted_fractions(self) -> list:
        return [n / self.N for n in self.sifted_lengths]

    def to_dict(self) -> dict:
        """JSON-ready view. Bit strings become {"length", "hex"}; links are numbered from 1."""

        def bs(b):
            return {"length": len(b), "hex": b.to_hex()}

        return {
            "N": self.N,
            "p": self.p,
            "seed": self.seed,
            "trial": self.trial,
            "sift_masks": [bs(b) for b in self.sift_masks],
            "sifted_lengths": list(self.sifted_lengths),
            "z_counts": list(self.z_counts),
            "x_counts": list(self.x_counts),
            "n0_obs": self.n0_obs,
            "m0_obs": self.m0_obs,
            "z_parities": [bs(b) for b in self.z_parities],
            "x_parities": [bs(b) for b in self.x_parities],
            "alice_key": bs(self.alice_key),
            "alice_test": bs(self.alice_test),
            "bob_key": bs(self.bob_key),
            "bob_test": bs(self.bob_test),
            "w_obs": self.w_obs,
            "z_errors": [bs(b) for b in self.z_errors],
            "x_errors": [bs(b) for b in self.x_errors],
            "abort_flags": [{"link": link + 1, "check": check} for link, check in self.abort_flags],
            "aborted": self.aborted,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


@dataclass
class _Link:
    mask: np.ndarray
    z_send: np.ndarray
    z_err: np.ndarray
    x_send: np.ndarray
    x_err: np.ndarray

    @property
    def z_recv(self):
        return self.z_send ^ self.z_err

    @property
    def x_recv(self):
        return self.x_send ^ self.x_err


def _run_link(params: ProtocolParams, seed: int, trial: int, link: int) -> _Link:
    N = params.N
    u_send = trial_rng(seed, trial, link, Stage.SENDER_BASIS).random(N)
    u_recv = trial_rng(seed, trial, link, Stage.RECEIVER_BASIS).random(N)
    bits = trial_rng(seed, trial, link, Stage.BITS).integers(0, 2, size=N, dtype=np.uint8)
    u_noise = trial_rng(seed, trial, link, Stage.NOISE).random(N)
    return _Link(*_kernels.sift_link(u_send, u_recv, bits, u_noise, params.p_X, params.Q))


def _fold(base: np.ndarray, parities: list, length: int) -> np.ndarray:
    out = base[:length].copy()
    for par in parities:
        out ^= par[:length]
    return out


def _abort_checks(links, sizes: DerivedSizes) -> list:
    flags = []
    for i, link in enumerate(links):
        if int(link.mask.sum()) < sizes.n_tilde:
            flags.append((i, "sifted_count"))
        if link.x_send.size < sizes.m0:
            flags.append((i, "x_count"))
        if link.z_send.size < sizes.n0:
            flags.append((i, "z_count"))
    return flags


def simulate_chain(cfg: SimConfig, trial: int) -> ChainTranscript:
    """Run one establishment through sifting, parity broadcasts and error estimation."""
    params = cfg.params
    p = params.p
    links = [_run_link(params, cfg.seed, trial, i) for i in range(p + 1)]

    # each STN truncates its left/right strings to the shorter one and broadcasts the XOR
    z_par, x_par = [], []
    for i in range(1, p + 1):
        left, right = links[i - 1], links[i]
        kz = min(left.z_send.size, right.z_send.size)
        kx = min(left.x_send.size, right.x_send.size)
        z_par.append(left.z_recv[:kz] ^ right.z_send[:kz])
        x_par.append(left.x_recv[:kx] ^ right.x_send[:kx])

    n0 = min(link.z_send.size for link in links)
    m0 = min(link.x_send.size for link in links)
    alice_key = links[0].z_send[:n0]
    alice_test = links[0].x_send[:m0]
    bob_key = _fold(links[p].z_recv, z_par, n0)
    bob_test = _fold(links[p].x_recv, x_par, m0)
    w_obs = float(np.count_nonzero(alice_test ^ bob_test)) / m0 if m0 else 1.0

    flags = []
    try:
        flags = _abort_checks(links, derive_sizes(params))
    except InfeasibleParametersError:
        if cfg.abort_policy == "paper-abort":
            raise
    empty = n0 == 0 or m0 == 0
    if empty:
        counts = [l.z_send.size if n0 == 0 else l.x_send.size for l in links]
        flags.append((int(np.argmin(counts)), "empty_block"))

    bs = BitString.from_bits
    return ChainTranscript(
        N=params.N,
        p=p,
        seed=cfg.seed,
        trial=trial,
        sift_masks=tuple(bs(l.mask) for l in links),
        sifted_lengths=tuple(int(l.mask.sum()) for l in links),
        z_counts=tuple(int(l.z_send.size) for l in links),
        x_counts=tuple(int(l.x_send.size) for l in links),
        n0_obs=int(n0),
        m0_obs=int(m0),
        z_parities=tuple(bs(v) for v in z_par),
        x_parities=tuple(bs(v) for v in x_par),
        alice_key=bs(alice_key),
        alice_test=bs(alice_test),
        bob_key=bs(bob_key),
        bob_test=bs(bob_test),
        w_obs=w_obs,
        z_errors=tuple(bs(l.z_err[:n0]) for l in links),
        x_errors=tuple(bs(l.x_err[:m0]) for l in links),
        abort_flags=tuple(flags),
        aborted=empty or (bool(flags) and cfg.abort_policy == "paper-abort"),
    )


def run_trials(cfg: SimConfig, threads: int = 1) -> list:
    """All ``cfg.trials`` transcripts, in trial order whatever ``threads`` is."""
    trials = range(cfg.trials)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(lambda t: simulate_chain(cfg, t), trials))
    return [simulate_chain(cfg, t) for t in trials]


@dataclass(frozen=True)
class DistilledKey:
    alice_key: BitString
    bob_key: BitString
    ledger: KeyRateResult
    sizes: DerivedSizes
    leakage_bits: float

    @property
    def feasible(self) -> bool:
        return self.ledger.key_length_clamped > 0


def ideal_error_correction(alice_raw: BitString, bob_raw: BitString) -> BitString:
    """Stand-in EC: Bob ends with Alice's string; leakage is charged by the ledger."""
    return alice_raw


def distill_key(
    transcript: ChainTranscript,
    params: ProtocolParams,
    seed: int,
    ec_efficiency: float = 1.0,
    corrector: Optional[Callable[[BitString, BitString], BitString]] = None,
) -> DistilledKey:
    """Error-correct and hash both raw keys down to the STN key length.

    The target length uses the observed w_obs and block sizes, with delta
    recomputed from the observed m0 and n0.
    """
    if transcript.aborted:
        raise AbortedTranscriptError(f"trial {transcript.trial} aborted: {transcript.abort_flags}")
    sizes = observed_sizes(params, transcript.m0_obs, transcript.n0_obs)
    ledger = stn_key_length(sizes, transcript.w_obs, params.eps, ec_efficiency)
    corrected = (corrector or ideal_error_correction)(transcript.alice_key, transcript.bob_key)
    ell = ledger.key_length_clamped
    rng = trial_rng(seed, transcript.trial, _END_TO_END, Stage.PRIVACY_AMPLIFICATION)
    toeplitz_seed = draw_seed(rng, transcript.n0_obs, ell)
    a = toeplitz_hash(transcript.alice_key.bits, toeplitz_seed, ell)
    b = toeplitz_hash(corrected.bits, toeplitz_seed, ell)
    return DistilledKey(
        alice_key=BitString.from_bits(a),
        bob_key=BitString.from_bits(b),
        ledger=ledger,
        sizes=sizes,
        leakage_bits=ledger.leakage,
    )


def estimate_total_noise_mc(Q: float, p: int, trials: int, seed: int, confidence: float = 0.99) -> Estimate:
    """Odd-parity frequency of p+1 independent Bernoulli(Q) link errors.

    Trials are drawn in fixed chunks of 2**20, chunk c from stream (seed, c).
    """
    if trials < 10_000:
        raise ValueError("estimate_total_noise_mc needs at least 10^4 trials")
    if not 0.0 <= Q <= 0.5:
        raise ValueError(f"Q must lie in [0, 0.5], got {Q!r}")
    odd = 0
    for c, start in enumerate(range(0, trials, _NOISE_CHUNK)):
        rows = min(_NOISE_CHUNK, trials - start)
        u = trial_rng(seed, c).random((rows, p + 1))
        odd += _kernels.odd_parity_count(u, Q)
    return wilson_interval(odd, trials, confidence)


def mean_and_std(values) -> tuple:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    return float(arr.mean()), float(arr.std(ddof=1)) if arr.size > 1 else 0.0
