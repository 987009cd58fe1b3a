"""Finite-key analysis, cost model and simulator for simplified trusted node chains."""
from ._accel import backend
from .bitmath import BitString, IndexSubset, binary_entropy, relative_weight, xor_fold
from .chainsim import (
    ChainTranscript,
    SimConfig,
    distill_key,
    estimate_total_noise_mc,
    run_trials,
    simulate_chain,
)
from .cost import CostModel, CostResult, cost_crossover, cost_stn, cost_tn, evaluate_costs, refresh_interval
from .errors import (
    AbortedTranscriptError,
    GuardError,
    InfeasibleCostError,
    InfeasibleParametersError,
    InstanceTooLargeError,
    PoolExhaustedError,
)
from .params import DerivedSizes, ProtocolParams, derive_sizes, failure_probability, pa_epsilon
from .rates import KeyRateResult, asymptotic_stn_rate, stn_key_length, stn_total_noise, tn_key_length
from .sampling import (
    SamplingInstance,
    analytic_failure_bound,
    exact_failure_probability,
    good_word_membership,
    mc_failure_estimate,
    worst_case_failure,
)

__version__ = "0.1.0"
