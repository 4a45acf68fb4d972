"""Slater-determinant algebra: minors, postselection probability,
entanglement spectra, and the quadratic (Pluecker) relations among minors.

Index-set conventions: every minor of a concatenated index list carries
the parity sign of the number of inversions in that list, and duplicate
indices make the minor vanish.  This single rule fixes every permutation
sign in the module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

_STATE_TOL = 1e-10


@dataclass(frozen=True)
class OrbitalMatrix:
    """N x L orbital matrix; rows are single-particle orbitals."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.entries, dtype=complex)
        if arr.ndim != 2:
            raise ValueError(f"orbital matrix must be 2-d, got shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @property
    def L(self) -> int:
        return self.entries.shape[1]

    @property
    def is_half_filled(self) -> bool:
        return self.L % 2 == 0 and self.N == self.L // 2

    def orthonormality_defect(self) -> float:
        if self.N == 0:
            return 0.0
        g = self.entries @ self.entries.conj().T
        return float(np.max(np.abs(g - np.eye(self.N))))

    def require_state(self, tol: float = _STATE_TOL) -> None:
        defect = self.orthonormality_defect()
        if defect > tol:
            raise ValueError(f"orbital rows not orthonormal (defect {defect:.3e} > {tol:g})")


def as_orbitals(phi) -> OrbitalMatrix:
    if isinstance(phi, OrbitalMatrix):
        return phi
    return OrbitalMatrix(np.asarray(phi))


@dataclass(frozen=True)
class EntanglementSpectrum:
    """Correlation eigenvalues xi (ascending) and energies eps = log((1-xi)/xi)."""

    xi: np.ndarray
    eps: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        eps = np.asarray(self.eps, dtype=float)
        if xi.shape != eps.shape:
            raise ValueError("xi and eps must have equal shapes")
        if np.any(np.diff(xi) < -1e-12):
            raise ValueError("xi must be sorted ascending")
        if np.any((xi < 0.0) | (xi > 1.0)):
            raise ValueError("xi must lie in [0, 1]")
        finite = np.isfinite(eps)
        with np.errstate(divide="ignore"):
            ref = np.log((1.0 - xi[finite]) / xi[finite])
        if finite.any() and np.max(np.abs(eps[finite] - ref)) > 1e-10:
            raise ValueError("eps inconsistent with xi")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "eps", eps)

    @classmethod
    def from_xi(cls, xi: Iterable[float]) -> "EntanglementSpectrum":
        xi = np.sort(np.asarray(list(xi), dtype=float))
        with np.errstate(divide="ignore"):
            eps = np.log((1.0 - xi) / xi)  # xi=0 -> +inf, xi=1 -> -inf
        return cls(xi, eps)


@dataclass(frozen=True)
class PostselectionProbability:
    """Uniform-Bell outcome probability, with the N = L/2 filling flag."""

    probability: float
    half_filled: bool


def _check_ascending(name: str, idx: Sequence[int], bound: int) -> None:
    idx = list(idx)
    if any(not 0 <= i < bound for i in idx):
        raise ValueError(f"{name} indices {idx} out of range [0, {bound})")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError(f"{name} indices must be strictly ascending, got {idx}")


def minor(phi, rows: Sequence[int], cols: Sequence[int]) -> complex:
    """det of the (rows, cols) submatrix; empty selection gives 1."""
    m = phi.entries if isinstance(phi, OrbitalMatrix) else np.asarray(phi)
    rows = list(rows)
    cols = list(cols)
    if len(rows) != len(cols):
        raise ValueError(f"ragged selection: {len(rows)} rows vs {len(cols)} cols")
    _check_ascending("row", rows, m.shape[0])
    _check_ascending("col", cols, m.shape[1])
    if not rows:
        return 1.0 + 0.0j
    return complex(np.linalg.det(m[np.ix_(rows, cols)]))


def _inversion_sign(seq: Sequence[int]) -> int:
    s = 1
    seq = list(seq)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                s = -s
    return s


def _ordered_minor(m: np.ndarray, cols: Sequence[int]) -> complex:
    """Minor on a column list in the given order: inversion sign times the
    ascending-sorted minor; zero when any column repeats."""
    cols = list(cols)
    if len(set(cols)) != len(cols):
        return 0.0 + 0.0j
    n = len(cols)
    if n != m.shape[0]:
        raise ValueError(f"need {m.shape[0]} columns, got {n}")
    return _inversion_sign(cols) * complex(np.linalg.det(m[:, sorted(cols)]))


def postselect_probability(phi, a_left: Iterable[int]) -> PostselectionProbability:
    """P = |det Phi(A_L) det Phi(A_R)|^2 for the uniform Bell outcome.

    Requires |a_left| = L/2 with L even; a non-half-filled state returns
    probability 0 with half_filled=False (the filling-selection branch).
    """
    phi = as_orbitals(phi)
    phi.require_state()
    a_left = sorted(set(a_left))
    if phi.L % 2:
        raise ValueError(f"L={phi.L} must be even")
    if len(a_left) != phi.L // 2:
        raise ValueError(f"measured set must have L/2={phi.L // 2} sites, got {len(a_left)}")
    _check_ascending("a_left", a_left, phi.L)
    if not phi.is_half_filled:
        return PostselectionProbability(0.0, False)
    a_right = [i for i in range(phi.L) if i not in set(a_left)]
    rows = list(range(phi.N))
    d_left = minor(phi, rows, a_left)
    d_right = minor(phi, rows, a_right)
    return PostselectionProbability(float(abs(d_left * d_right) ** 2), True)


def log_postselect_probability(phi, a_left: Iterable[int]) -> float:
    """log of postselect_probability via slogdet, safe far below underflow.

    Returns -inf for vanishing minors or a non-half-filled state.
    """
    phi = as_orbitals(phi)
    phi.require_state()
    a_left = sorted(set(a_left))
    if phi.L % 2:
        raise ValueError(f"L={phi.L} must be even")
    if len(a_left) != phi.L // 2:
        raise ValueError(f"measured set must have L/2={phi.L // 2} sites, got {len(a_left)}")
    _check_ascending("a_left", a_left, phi.L)
    if not phi.is_half_filled:
        return float("-inf")
    a_right = [i for i in range(phi.L) if i not in set(a_left)]
    total = 0.0
    for cols in (a_left, a_right):
        sign, logdet = np.linalg.slogdet(phi.entries[:, cols])
        if sign == 0 or not np.isfinite(logdet):
            return float("-inf")
        total += logdet
    return 2.0 * total


def correlation_submatrix(phi, a: Iterable[int]) -> np.ndarray:
    """C(A) = Phi(A)† Phi(A), the restricted correlation matrix."""
    phi = as_orbitals(phi)
    a = sorted(set(a))
    if not a:
        raise ValueError("site set must be nonempty")
    _check_ascending("site", a, phi.L)
    block = phi.entries[:, a]
    return block.conj().T @ block


def entanglement_spectrum(c: np.ndarray) -> EntanglementSpectrum:
    """Eigenvalues xi of a correlation matrix and eps = log((1-xi)/xi)."""
    c = np.asarray(c)
    herm_defect = float(np.max(np.abs(c - c.conj().T)))
    if herm_defect > 1e-9:
        raise ValueError(f"correlation matrix not hermitian (defect {herm_defect:.3e})")
    xi = np.linalg.eigvalsh(c)
    if np.any(xi < -1e-10) or np.any(xi > 1.0 + 1e-10):
        raise ValueError(f"correlation eigenvalues outside [0,1]: {xi}")
    xi = np.clip(xi, 0.0, 1.0)
    return EntanglementSpectrum.from_xi(xi)


def log_probability_from_spectrum(spec: EntanglementSpectrum) -> float:
    """log P = -2 sum_i log(2 cosh(eps_i/2)), stable for large |eps|.

    Each term is |eps|/2 + log(1 + exp(-|eps|)); an infinite eps makes the
    sum infinite, returning log P = -inf (probability exactly zero).
    """
    a = np.abs(spec.eps)
    with np.errstate(over="ignore"):
        terms = 0.5 * a + np.log1p(np.exp(-a))
    return float(-2.0 * np.sum(terms))


def plucker_single_residual(m, a: Sequence[int], b: Sequence[int]) -> float:
    """Single-column relation residual: |sum_l (-1)^l D(a+[j_l]) D(b\\{j_l})|.

    Reported relative to the largest term magnitude (absolute when all
    terms are below 1e-300).  Mathematically zero for any matrix.
    """
    m = m.entries if isinstance(m, OrbitalMatrix) else np.asarray(m)
    n = m.shape[0]
    a = list(a)
    b = list(b)
    if len(a) != n - 1 or len(b) != n + 1:
        raise ValueError(f"need |a| = N-1 = {n - 1} and |b| = N+1 = {n + 1}, "
                         f"got {len(a)} and {len(b)}")
    _check_ascending("a", a, m.shape[1])
    _check_ascending("b", b, m.shape[1])
    terms = []
    for l, j in enumerate(b):
        left = _ordered_minor(m, a + [j])
        right = _ordered_minor(m, [x for x in b if x != j])
        terms.append((-1.0) ** l * left * right)
    return _relative_residual(terms)


def plucker_general_residual(m, e: Sequence[int], f: Sequence[int],
                             s: Sequence[int]) -> float:
    """Shuffle-relation residual: |sum_C sgn(C+D) D(e+C) D(D+f)| over
    C subset of s with |C| = N-k, D = s\\C.

    Overlaps between e/f and s are fine: they only produce zero minors.
    """
    m = m.entries if isinstance(m, OrbitalMatrix) else np.asarray(m)
    n = m.shape[0]
    e = list(e)
    f = list(f)
    s = list(s)
    k = len(e)
    if not 0 <= k <= n - 1:
        raise ValueError(f"|e| must lie in [0, N-1], got {k}")
    if len(f) != n - k - 1:
        raise ValueError(f"need |f| = N-k-1 = {n - k - 1}, got {len(f)}")
    if len(s) != n + 1:
        raise ValueError(f"need |s| = N+1 = {n + 1}, got {len(s)}")
    for name, idx in (("e", e), ("f", f), ("s", s)):
        _check_ascending(name, idx, m.shape[1])
    terms = []
    for c_set in combinations(s, n - k):
        d_set = [x for x in s if x not in c_set]
        sgn = _inversion_sign(list(c_set) + d_set)
        terms.append(sgn * _ordered_minor(m, e + list(c_set)) * _ordered_minor(m, d_set + f))
    return _relative_residual(terms)


def _relative_residual(terms) -> float:
    total = abs(sum(terms))
    scale = max((abs(t) for t in terms), default=0.0)
    if scale < 1e-300:
        return total
    return total / scale


@dataclass(frozen=True)
class WavefunctionReport:
    """Amplitude-structure check of the projected doubled state."""

    trivial: bool
    probability: float
    max_overlap_amplitude: float
    max_uniformity_deviation: float
    passed: bool


def theorem1_wavefunction_checks(phi, a_left: Iterable[int],
                                 tol: float = 1e-10) -> WavefunctionReport:
    """Check the remaining-amplitude structure after projecting a_left on |+⟩.

    (i) amplitudes whose upper/lower remaining occupations overlap vanish;
    (ii) the disjoint-cover amplitudes share one modulus and follow the
    (-1)^{|B_R|} times layer-interleaving-parity sign pattern.

    Configurations are read in the representative sector where every
    measured rung is occupied in the upper layer.  Zero postselection
    probability short-circuits to a trivial-state report.
    """
    from . import fock  # local import; fock depends on this module
    from .rungs import RungProjector

    phi = as_orbitals(phi)
    if not phi.is_half_filled:
        raise ValueError("wavefunction checks need a half-filled orbital matrix")
    if 2 * phi.L > 16:
        raise ValueError(f"L={phi.L} too large for the dense oracle")
    a_left = sorted(set(a_left))
    _check_ascending("a_left", a_left, phi.L)

    L = phi.L
    state = fock.tensor_double(fock.build_slater_state(phi))
    plus = RungProjector.bell_plus()
    prob = 1.0
    for i in a_left:
        state, p = fock.apply_rung_projector(state, i, plus)
        prob *= p
        if prob < 1e-12:
            return WavefunctionReport(True, prob, 0.0, 0.0, True)
        state = state.normalize()

    a_right = [i for i in range(L) if i not in set(a_left)]
    amps = state.amplitudes
    base_upper = 0
    for i in a_left:
        base_upper |= 1 << i

    max_overlap = 0.0
    adjusted = []
    for r in range(len(a_right) + 1):
        for upper in combinations(a_right, r):
            for lower in combinations(a_right, len(a_right) - r):
                idx = base_upper
                for i in upper:
                    idx |= 1 << i
                for j in lower:
                    idx |= 1 << (L + j)
                amp = amps[idx]
                if set(upper) & set(lower):
                    max_overlap = max(max_overlap, abs(amp))
                    continue
                # One chosen mode per rung, in rung order: measured rungs sit
                # in the upper layer in this sector, and their crossings with
                # occupied unmeasured upper modes carry signs too.
                chosen_upper = set(upper) | set(a_left)
                modes = [i if i in chosen_upper else L + i for i in range(L)]
                sign = (-1) ** len(lower) * _inversion_sign(modes)
                adjusted.append(amp * sign)

    adjusted = np.array(adjusted)
    mean = adjusted.mean()
    spread = float(np.max(np.abs(adjusted - mean)))
    scale = max(abs(mean), 1e-300)
    passed = max_overlap <= tol and spread / scale <= tol and abs(mean) > 0
    return WavefunctionReport(False, prob, max_overlap, spread / scale, passed)
