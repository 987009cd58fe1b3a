from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class Estimate:
    """A binomial proportion with its Wilson score interval."""

    successes: int
    trials: int
    estimate: float
    lower: float
    upper: float
    confidence: float = 0.99

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def wilson_interval(successes: int, trials: int, confidence: float = 0.99) -> Estimate:
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = norm.ppf(0.5 + confidence / 2.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return Estimate(
        successes=int(successes),
        trials=int(trials),
        estimate=phat,
        lower=max(0.0, centre - half),
        upper=min(1.0, centre + half),
        confidence=confidence,
    )


def trial_rng(seed: int, *tags: int) -> np.random.Generator:
    """Independent generator for the stream identified by (seed, *tags)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, tags)]))
