"""Closed-form reference laws, evaluated locally for display only."""
import math

LOG2 = math.log(2.0)


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def rung_entropy(eps: float) -> float:
    """Entropy in nats of a tilted single-occupancy pair state."""
    return binary_entropy((1.0 + eps) / 2.0)


def half_measurement_entropy(L: float) -> float:
    """Entropy in nats left behind by measuring half the rungs."""
    return 0.5 * L * LOG2


def counting_entropy(n_m: float) -> float:
    """One log 2 per measured rung."""
    return n_m * LOG2
