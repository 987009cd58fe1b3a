class STNChainError(Exception):
    """Base class for errors raised by stnchain."""


class InfeasibleParametersError(STNChainError, ValueError):
    """N is too small for the chosen failure budgets (a block size is <= 0)."""


class InfeasibleCostError(STNChainError, ValueError):
    """A cost is undefined because the relevant key length is not positive."""


class PoolExhaustedError(InfeasibleCostError):
    """The initial authentication key pool cannot cover even one refresh."""


class InstanceTooLargeError(STNChainError, ValueError):
    """Exhaustive enumeration would exceed the configured subset budget."""


class GuardError(STNChainError, ValueError):
    """A desk-scale resource guard was violated."""


class AbortedTranscriptError(STNChainError, ValueError):
    """Key distillation was requested on an aborted protocol run."""
