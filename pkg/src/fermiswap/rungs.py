"""Single-occupancy rung states (alpha, beta) used as measurement projectors.

A rung couples upper-layer mode i to its lower-layer partner L+i.  The
projector state is w† |vac⟩ with w† = alpha·c_i† + beta·c_{L+i}†; Bell
states and their epsilon-tilted variants are special cases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class RungProjector:
    """Amplitudes (alpha, beta) of a normalized single-occupancy rung state."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        nrm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(nrm - 1.0) > _NORM_TOL:
            raise ValueError(f"rung amplitudes not normalized: |alpha|^2+|beta|^2 = {nrm!r}")

    @classmethod
    def bell_plus(cls) -> "RungProjector":
        s = 1.0 / math.sqrt(2.0)
        return cls(s, s)

    @classmethod
    def bell_minus(cls) -> "RungProjector":
        s = 1.0 / math.sqrt(2.0)
        return cls(s, -s)

    @classmethod
    def epsilon_plus(cls, eps: float) -> "RungProjector":
        _check_eps(eps)
        return cls(math.sqrt(1.0 + eps) / math.sqrt(2.0),
                   math.sqrt(1.0 - eps) / math.sqrt(2.0))

    @classmethod
    def epsilon_minus(cls, eps: float) -> "RungProjector":
        _check_eps(eps)
        return cls(math.sqrt(1.0 - eps) / math.sqrt(2.0),
                   -math.sqrt(1.0 + eps) / math.sqrt(2.0))

    def orthogonal(self) -> "RungProjector":
        """The orthogonal single-occupancy partner state (-beta*, alpha*)."""
        return RungProjector(-np.conj(self.beta), np.conj(self.alpha))

    def pair_amplitudes(self) -> np.ndarray:
        """4-component amplitude vector on the two rung modes.

        Index k = n_upper + 2*n_lower; only the single-occupancy entries
        (k = 1 and k = 2) are populated.
        """
        v = np.zeros(4, dtype=complex)
        v[1] = self.alpha
        v[2] = self.beta
        return v

    def correlation_block(self) -> np.ndarray:
        """2x2 complex correlation matrix ⟨c_a† c_b⟩ on (upper, lower)."""
        a, b = complex(self.alpha), complex(self.beta)
        return np.array([[abs(a) ** 2, np.conj(a) * b],
                         [np.conj(b) * a, abs(b) ** 2]])

    def rung_entropy(self) -> float:
        """Single-rung entanglement entropy in nats: h(|alpha|^2).

        For epsilon-tilted states this is the per-rung entropy of the
        unmeasured complement, -(1-eps)/2 log((1-eps)/2) - (1+eps)/2 log((1+eps)/2).
        """
        p = abs(self.alpha) ** 2
        return _binary_entropy(p)


def _check_eps(eps: float):
    if not -1.0 <= eps <= 1.0:
        raise ValueError(f"epsilon must lie in [-1, 1], got {eps}")


def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)
