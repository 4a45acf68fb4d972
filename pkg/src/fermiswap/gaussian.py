"""Majorana correlation-matrix backend for fermionic Gaussian states.

Convention: a_{2j} = c_j + c_j†, a_{2j+1} = -i(c_j - c_j†), so each mode
j owns the Majorana index pair (2j, 2j+1).  States and Gaussian operators
are carried as the real antisymmetric matrix R with Γ = iR, where
Γ_kl = ⟨a_k a_l⟩ − δ_kl.  Intermediate results of the composition rule
are genuinely complex and handled internally; public values are real.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .rungs import RungProjector
from .slater import as_orbitals

_ANTISYM_TOL = 1e-10
_PHYS_TOL = 1e-8
SINGULAR_SMIN = 1e-10
_REG_MIX = 1e-9
_REG_AGREE = 1e-6


class CompositionSingularError(ArithmeticError):
    """(1 + Γ1Γ2) is singular beyond the regularization policy."""

    def __init__(self, smallest_singular_value: float):
        self.smallest_singular_value = float(smallest_singular_value)
        super().__init__(
            f"composition singular: smallest singular value of (1 + G1 G2) is "
            f"{self.smallest_singular_value:.3e}")


@dataclass(frozen=True)
class MajoranaCorrelation:
    """Real antisymmetric 2M x 2M matrix R, Γ = iR."""

    R: np.ndarray

    def __post_init__(self):
        R = np.ascontiguousarray(self.R, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] % 2:
            raise ValueError(f"R must be square of even dimension, got {R.shape}")
        asym = float(np.max(np.abs(R + R.T))) if R.size else 0.0
        if asym > _ANTISYM_TOL:
            raise ValueError(f"R not antisymmetric (max |R+R^T| = {asym:.3e})")
        if R.size:
            smax = float(np.linalg.norm(R, 2))
            if smax > 1.0 + _PHYS_TOL:
                raise ValueError(f"R unphysical (largest singular value {smax})")
        R.flags.writeable = False
        object.__setattr__(self, "R", R)

    @property
    def num_modes(self) -> int:
        return self.R.shape[0] // 2

    def is_pure(self, tol: float = _PHYS_TOL) -> bool:
        eye = np.eye(self.R.shape[0])
        return float(np.max(np.abs(self.R @ self.R.T - eye))) <= tol

    def gamma(self) -> np.ndarray:
        """Complex Γ = iR."""
        return 1j * self.R


@dataclass(frozen=True)
class SubsystemSpec:
    """Kept fermionic modes; mode j expands to Majorana indices (2j, 2j+1)."""

    modes: Tuple[int, ...]

    def __post_init__(self):
        modes = tuple(int(m) for m in self.modes)
        if len(set(modes)) != len(modes):
            raise ValueError(f"duplicate modes in {modes}")
        if any(m < 0 for m in modes):
            raise ValueError(f"negative mode index in {modes}")
        object.__setattr__(self, "modes", tuple(sorted(modes)))

    def majorana_indices(self) -> list:
        out = []
        for m in self.modes:
            out.extend((2 * m, 2 * m + 1))
        return out


def correlation_to_majorana(c: np.ndarray) -> np.ndarray:
    """Map a complex mode correlation matrix C_jm = ⟨c_j† c_m⟩ to R."""
    c = np.asarray(c, dtype=complex)
    m = c.shape[0]
    re, im = c.real, c.imag
    eye = np.eye(m)
    R = np.empty((2 * m, 2 * m))
    R[0::2, 0::2] = 2.0 * im
    R[1::2, 1::2] = 2.0 * im
    R[0::2, 1::2] = eye - 2.0 * re
    R[1::2, 0::2] = 2.0 * re - eye
    return R


def majorana_to_correlation(R: np.ndarray) -> np.ndarray:
    """Inverse of correlation_to_majorana (number-conserving readout)."""
    R = np.asarray(R, dtype=float)
    m = R.shape[0] // 2
    eye = np.eye(m)
    re = 0.5 * (R[1::2, 0::2] + eye)
    im = 0.5 * R[0::2, 0::2]
    return re + 1j * im


def gamma_from_orbitals(phi) -> MajoranaCorrelation:
    """Pure-state correlation matrix of the Slater state with orbital rows Φ."""
    phi = as_orbitals(phi)
    phi.require_state()
    c = phi.entries.conj().T @ phi.entries
    return MajoranaCorrelation(correlation_to_majorana(c))


def gamma_double(g: MajoranaCorrelation,
                 lower: Optional[MajoranaCorrelation] = None) -> MajoranaCorrelation:
    """Block direct sum of two layers under bilayer-block mode ordering."""
    if lower is None:
        lower = g
    if lower.num_modes != g.num_modes:
        raise ValueError("layers must have equal mode counts")
    n = g.R.shape[0]
    R = np.zeros((2 * n, 2 * n))
    R[:n, :n] = g.R
    R[n:, n:] = lower.R
    return MajoranaCorrelation(R)


def projector_gamma(L: int, measured: Iterable[int], proj: RungProjector) -> MajoranaCorrelation:
    """Correlation matrix of the rung-projector product ρ_M on 2L modes.

    Measured rungs carry the pure (alpha, beta) correlation block; all
    unmeasured modes are maximally mixed (R exactly zero there).
    """
    measured = sorted(set(measured))
    if measured and not (0 <= measured[0] and measured[-1] < L):
        raise ValueError(f"measured rungs {measured} out of range for L={L}")
    c = 0.5 * np.eye(2 * L, dtype=complex)
    block = proj.correlation_block()
    for i in measured:
        pair = (i, L + i)
        c[np.ix_(pair, pair)] = block
    return MajoranaCorrelation(correlation_to_majorana(c))


def _compose_core(G1: np.ndarray, G2: np.ndarray) -> np.ndarray:
    """Γ̃ = 1 − (1−Γ2)(1+Γ1Γ2)^{-1}(1−Γ1) with the singular-set policy.

    Near the singular set the system is solved by SVD least squares and
    re-solved with both factors scaled by (1 − 1e-9) (an infinitesimally
    mixed projector); the two must agree to 1e-6 or composition-singular
    is raised with the offending singular value.
    """
    eye = np.eye(G1.shape[0])
    A = eye + G1 @ G2
    smin = float(np.linalg.svd(A, compute_uv=False)[-1])
    if smin >= SINGULAR_SMIN:
        X = np.linalg.solve(A, eye - G1)
        return eye - (eye - G2) @ X

    X = np.linalg.lstsq(A, eye - G1, rcond=None)[0]
    direct = eye - (eye - G2) @ X

    s = 1.0 - _REG_MIX
    A_mix = eye + (s * G1) @ (s * G2)
    smin_mix = float(np.linalg.svd(A_mix, compute_uv=False)[-1])
    if smin_mix < SINGULAR_SMIN:
        raise CompositionSingularError(smin)
    X_mix = np.linalg.solve(A_mix, eye - s * G1)
    mixed = eye - (eye - s * G2) @ X_mix
    if float(np.max(np.abs(direct - mixed))) < _REG_AGREE:
        return mixed
    raise CompositionSingularError(smin)


def _realify(G: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    R = -1j * G
    imag = float(np.max(np.abs(R.imag)))
    if imag > tol:
        raise ValueError(f"composition result is not a hermitian-operator "
                         f"correlation matrix (imaginary part {imag:.3e})")
    return R.real


def _restore_purity(R: np.ndarray, steps: int = 3) -> np.ndarray:
    """Project a noisy pure-state R back onto the orthogonal manifold.

    A pure state has orthogonal antisymmetric R (R R^T = 1).  The iteration
    R <- (3R + R^3)/2 is Newton-Schulz for the orthogonal polar factor,
    preserves antisymmetry exactly (odd polynomial), and converges
    quadratically from the noise levels an ill-conditioned but rescuable
    composition produces.  Raises if the residual does not vanish, which
    means the input was not a slightly-perturbed pure state.
    """
    R = 0.5 * (R - R.T)
    for _ in range(steps):
        R = 0.5 * (3.0 * R + R @ (R @ R))
    residual = float(np.max(np.abs(R @ R + np.eye(R.shape[0]))))
    if residual > 1e-12:
        raise ValueError(f"purity restoration did not converge "
                         f"(residual {residual:.3e})")
    return R


def compose(g1: MajoranaCorrelation, g2: MajoranaCorrelation) -> MajoranaCorrelation:
    """Correlation matrix of the normalized product ρ1 ρ2.

    The result is only a real correlation matrix when ρ1ρ2 is hermitian
    (e.g. commuting factors or a full sandwich); otherwise this raises and
    the complex chain in post_measurement_gamma should be used.
    """
    if g1.num_modes != g2.num_modes:
        raise ValueError("mode counts differ")
    G = _compose_core(g1.gamma(), g2.gamma())
    return MajoranaCorrelation(_realify(G))


def post_measurement_gamma(g0: MajoranaCorrelation,
                           gM: MajoranaCorrelation,
                           assume_pure: bool = False) -> MajoranaCorrelation:
    """Γ_post = (Γ_M × Γ_0) × Γ_M, the postselected state's correlations.

    The intermediate Γ_M × Γ_0 is a complex matrix (its operator is not
    hermitian); only the final sandwich is realified.

    With assume_pure=True the caller asserts that the exact result is a
    pure state (pure ρ0 sandwiched by a projector).  The realification
    tolerance is then relaxed and the result is projected back onto the
    pure manifold, which removes the noise an ill-conditioned solve leaves
    behind at small conditional probabilities.
    """
    if g0.num_modes != gM.num_modes:
        raise ValueError("mode counts differ")
    mid = _compose_core(gM.gamma(), g0.gamma())
    out = _compose_core(mid, gM.gamma())
    if not assume_pure:
        return MajoranaCorrelation(_realify(out))
    return MajoranaCorrelation(_restore_purity(_realify(out, tol=1e-3)))


def _binary_entropy_sum(p: np.ndarray) -> float:
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = -p * np.log(p) - (1.0 - p) * np.log1p(-p)
    return float(np.sum(np.nan_to_num(terms, nan=0.0, posinf=0.0, neginf=0.0)))


def entropy_from_gamma(g: MajoranaCorrelation,
                       sub: Union[SubsystemSpec, Sequence[int]]) -> float:
    """Von Neumann entropy (nats) of the reduced state on a mode subset.

    Restrict R to the subsystem's Majorana indices; the eigenvalues ±ν of
    the restricted iR give S = Σ_pairs h((1+ν)/2), evaluated as half the
    sum over all eigenvalues.
    """
    if not isinstance(sub, SubsystemSpec):
        sub = SubsystemSpec(tuple(sub))
    if sub.modes and sub.modes[-1] >= g.num_modes:
        raise ValueError(f"subsystem modes {sub.modes} out of range for M={g.num_modes}")
    if not sub.modes:
        return 0.0
    idx = sub.majorana_indices()
    r_sub = g.R[np.ix_(idx, idx)]
    nu = np.linalg.eigvalsh(1j * r_sub)
    nu = np.clip(nu, -1.0, 1.0)
    return 0.5 * _binary_entropy_sum((1.0 + nu) / 2.0)


def outcome_log_probability(g0: MajoranaCorrelation, gM: MajoranaCorrelation,
                            n_measured: int) -> float:
    """log P of the projector-product outcome: P = 2^{-2 n_m} √det(1+Γ0Γ_M).

    Follows from Tr ρ1ρ2 = 2^{-M} √det(1+Γ1Γ2) and the 2^{2n_m-2L}
    normalization of the projector product read as a Gaussian operator.
    Returns -inf for a (numerically) vanishing determinant.
    """
    if g0.num_modes != gM.num_modes:
        raise ValueError("mode counts differ")
    A = np.eye(g0.R.shape[0]) + (1j * g0.R) @ (1j * gM.R)
    sign, logdet = np.linalg.slogdet(A)
    if not np.isfinite(logdet) or sign.real <= 0.0:
        return float("-inf")
    return float(0.5 * logdet - 2.0 * n_measured * np.log(2.0))


def outcome_probability(g0: MajoranaCorrelation, gM: MajoranaCorrelation,
                        n_measured: int) -> float:
    return float(np.exp(outcome_log_probability(g0, gM, n_measured)))


def gaussian_fidelity(g1: MajoranaCorrelation, g2: MajoranaCorrelation) -> float:
    """|⟨ψ1|ψ2⟩|² for two pure Gaussian states: 2^{-M} √det(1+Γ1Γ2)."""
    if g1.num_modes != g2.num_modes:
        raise ValueError("mode counts differ")
    A = np.eye(g1.R.shape[0]) + (1j * g1.R) @ (1j * g2.R)
    sign, logdet = np.linalg.slogdet(A)
    if not np.isfinite(logdet) or sign.real <= 0.0:
        return 0.0
    return float(np.exp(0.5 * logdet - g1.num_modes * np.log(2.0)))
