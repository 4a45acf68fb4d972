"""Dense Fock-space oracle for up to 16 fermionic modes.

States are stored as full complex amplitude vectors over occupation
bitstrings: bit j of the basis index is the occupation of mode j.  The
canonical basis state for an occupied set S is the creation-operator
product over S in ascending mode order applied to the vacuum; every
Jordan-Wigner sign in this module is defined relative to that single
ordering.

For bilayer problems the mode ordering is layer-block: upper-layer site
i is mode i, its lower partner is mode L+i, and rung i couples modes
(i, L+i).  This is the brute-force backend everything else is checked
against; it is deliberately simple and O(2^M).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .rungs import RungProjector
from .slater import as_orbitals

MAX_MODES = 16
_NORM_TOL = 1e-12


class CapacityError(ValueError):
    """Raised when a dense computation would exceed the 2^16 cap."""


@lru_cache(maxsize=32)
def _occupations(num_modes: int) -> np.ndarray:
    """(2^M, M) uint8 table: row n holds the bits of n, LSB first."""
    n = np.arange(1 << num_modes, dtype=np.uint32)
    return ((n[:, None] >> np.arange(num_modes, dtype=np.uint32)[None, :]) & 1).astype(np.uint8)


@lru_cache(maxsize=32)
def _popcounts(num_modes: int) -> np.ndarray:
    return _occupations(num_modes).sum(axis=1).astype(np.int64)


@dataclass(frozen=True)
class ModeOrdering:
    """Mode layout: a flat single layer, or two stacked layers of L sites."""

    layout: str  # "single-layer" | "bilayer-block"
    sites_per_layer: int

    def __post_init__(self):
        if self.layout not in ("single-layer", "bilayer-block"):
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.sites_per_layer < 1:
            raise ValueError("sites_per_layer must be positive")

    @property
    def num_modes(self) -> int:
        if self.layout == "bilayer-block":
            return 2 * self.sites_per_layer
        return self.sites_per_layer

    def rung_modes(self, i: int) -> Tuple[int, int]:
        """Mode pair (upper, lower) of rung i under bilayer-block layout."""
        if self.layout != "bilayer-block":
            raise ValueError("rungs are only defined for bilayer-block layouts")
        if not 0 <= i < self.sites_per_layer:
            raise ValueError(f"rung {i} out of range for L={self.sites_per_layer}")
        return i, self.sites_per_layer + i


@dataclass(frozen=True)
class FockState:
    """Dense state vector on num_modes fermionic modes."""

    num_modes: int
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        if self.num_modes > MAX_MODES:
            raise CapacityError(f"{self.num_modes} modes exceeds the dense cap of {MAX_MODES}")
        amps = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.num_modes,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, expected ({1 << self.num_modes},)")
        if self.normalized:
            nrm = float(np.vdot(amps, amps).real)
            if abs(nrm - 1.0) > _NORM_TOL:
                raise ValueError(f"state marked normalized but |psi|^2 = {nrm!r}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalize(self) -> "FockState":
        nrm = np.sqrt(self.norm_squared())
        if nrm < 1e-150:
            raise ValueError("cannot normalize a (numerically) zero state")
        return FockState(self.num_modes, self.amplitudes / nrm)


def vacuum_state(num_modes: int) -> FockState:
    amps = np.zeros(1 << num_modes, dtype=complex)
    amps[0] = 1.0
    return FockState(num_modes, amps)


def basis_state(num_modes: int, occupied: Iterable[int]) -> FockState:
    """Canonical basis state |S⟩ (ascending creation order, amplitude +1)."""
    idx = 0
    for j in occupied:
        if not 0 <= j < num_modes:
            raise ValueError(f"mode {j} out of range")
        if idx >> j & 1:
            raise ValueError(f"mode {j} listed twice")
        idx |= 1 << j
    amps = np.zeros(1 << num_modes, dtype=complex)
    amps[idx] = 1.0
    return FockState(num_modes, amps)


def build_slater_state(phi) -> FockState:
    """Slater determinant b_1†…b_N†|vac⟩ for orbital rows Φ.

    The amplitude on an occupied set A (ascending) is det Φ[:, A]; the
    left-to-right application of the b_q† fixes the global sign.
    """
    phi = as_orbitals(phi)
    phi.require_state()
    if phi.L > MAX_MODES:
        raise CapacityError(f"L={phi.L} exceeds the dense cap of {MAX_MODES}")
    amps = np.zeros(1 << phi.L, dtype=complex)
    cols = phi.entries
    if phi.N == 0:
        amps[0] = 1.0
        return FockState(phi.L, amps)
    for occ in combinations(range(phi.L), phi.N):
        idx = 0
        for j in occ:
            idx |= 1 << j
        amps[idx] = np.linalg.det(cols[:, occ])
    nrm = np.linalg.norm(amps)
    # Cauchy-Binet gives norm 1 exactly for orthonormal rows; strip roundoff.
    return FockState(phi.L, amps / nrm)


def tensor_double(state: FockState, lower: Optional[FockState] = None) -> FockState:
    """Two stacked copies under bilayer-block ordering, upper ops first.

    With the lower layer occupying the high bits, the canonical ascending
    creation order coincides with "all upper-layer operators before all
    lower-layer ones", so the amplitude on (A, B) is exactly
    amp_upper(A)·amp_lower(B) with no extra sign.  A different `lower`
    state gives the imperfect-copy bilayer.
    """
    if lower is None:
        lower = state
    if lower.num_modes != state.num_modes:
        raise ValueError("layers must have equal mode counts")
    if 2 * state.num_modes > MAX_MODES:
        raise CapacityError(f"2L={2 * state.num_modes} exceeds the dense cap of {MAX_MODES}")
    amps = np.kron(lower.amplitudes, state.amplitudes)
    return FockState(2 * state.num_modes, amps,
                     normalized=state.normalized and lower.normalized)


def _rung_mode_pair(state: FockState, rung: int) -> Tuple[int, int, int]:
    if state.num_modes % 2:
        raise ValueError("bilayer states need an even mode count")
    L = state.num_modes // 2
    if not 0 <= rung < L:
        raise ValueError(f"rung {rung} out of range for L={L}")
    return L, rung, L + rung


def apply_pair_state_projector(state: FockState, rung: int,
                               pair_state: FockState) -> Tuple[FockState, float]:
    """Project rung (i, L+i) onto |chi⟩⟨chi| for an arbitrary two-mode chi.

    Returns the unnormalized projected vector and its squared norm (the
    outcome probability for a normalized input).  chi's index convention
    is k = n_upper + 2·n_lower; its basis states are (c_i†)^a (c_{L+i}†)^b
    |vac⟩, embedded with the Jordan-Wigner parity of the modes each
    creator crosses in the canonical ordering.
    """
    if pair_state.num_modes != 2:
        raise ValueError("pair_state must live on exactly two modes")
    _, i, ibar = _rung_mode_pair(state, rung)
    chi = pair_state.amplitudes
    M = state.num_modes
    psi = state.amplitudes

    n = np.arange(1 << M)
    mask = (1 << i) | (1 << ibar)
    rest = n[(n & mask) == 0]
    pc = _popcounts(M)
    s_i = pc[rest & ((1 << i) - 1)] & 1
    s_b = pc[rest & ((1 << ibar) - 1)] & 1

    def sgn(a: int, b: int) -> np.ndarray:
        return 1.0 - 2.0 * ((a * s_i + b * s_b) & 1)

    inner = np.zeros(rest.shape, dtype=complex)
    for a in (0, 1):
        for b in (0, 1):
            inner += np.conj(chi[a + 2 * b]) * sgn(a, b) * psi[rest + a * (1 << i) + b * (1 << ibar)]

    out = np.zeros_like(psi)
    for a in (0, 1):
        for b in (0, 1):
            out[rest + a * (1 << i) + b * (1 << ibar)] = chi[a + 2 * b] * sgn(a, b) * inner

    prob = float(np.vdot(out, out).real)
    return FockState(M, out, normalized=False), prob


def apply_rung_projector(state: FockState, rung: int,
                         proj: RungProjector) -> Tuple[FockState, float]:
    """Project rung onto the single-occupancy state alpha·c_i† + beta·c_{L+i}†."""
    pair = FockState(2, proj.pair_amplitudes())
    return apply_pair_state_projector(state, rung, pair)


def reduced_density_matrix(state: FockState, modes: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the given modes (kept in ascending order).

    The kept modes are moved to the front with fermionic reordering signs
    (each kept occupied mode crosses the occupied traced modes below it),
    then the tail is traced out.
    """
    keep = sorted(set(modes))
    if not keep:
        raise ValueError("cannot reduce onto an empty mode set")
    if keep[0] < 0 or keep[-1] >= state.num_modes:
        raise ValueError(f"modes {modes} out of range for M={state.num_modes}")
    traced = [m for m in range(state.num_modes) if m not in set(keep)]
    occ = _occupations(state.num_modes)
    amps = state.amplitudes

    k = len(keep)
    q = len(traced)
    i_keep = occ[:, keep].astype(np.int64) @ (1 << np.arange(k, dtype=np.int64))
    if q:
        i_tr = occ[:, traced].astype(np.int64) @ (1 << np.arange(q, dtype=np.int64))
    else:
        i_tr = np.zeros(len(amps), dtype=np.int64)

    crossings = np.zeros(len(amps), dtype=np.int64)
    for m in keep:
        below = [t for t in traced if t < m]
        if below:
            crossings += occ[:, m].astype(np.int64) * occ[:, below].sum(axis=1, dtype=np.int64)
    signs = 1.0 - 2.0 * (crossings & 1)

    table = np.zeros((1 << k, 1 << q), dtype=complex)
    table[i_keep, i_tr] = signs * amps
    rho = table @ table.conj().T
    return rho


def entanglement_entropy(state: FockState, modes: Sequence[int]) -> float:
    """Von Neumann entropy (nats) of the reduced state on `modes`."""
    if not state.normalized:
        raise ValueError("entanglement entropy needs a normalized state")
    rho = reduced_density_matrix(state, modes)
    evals = np.linalg.eigvalsh(rho)
    evals = evals[evals > 1e-14]
    return float(-np.sum(evals * np.log(evals)))


def inner_product(a: FockState, b: FockState) -> complex:
    if a.num_modes != b.num_modes:
        raise ValueError("mode counts differ")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: FockState, b: FockState) -> float:
    """|⟨a|b⟩|^2 for normalized states."""
    f = abs(inner_product(a, b)) ** 2
    if f > 1.0 + 1e-12:
        raise ValueError(f"fidelity {f} exceeds 1 beyond tolerance; inputs not normalized?")
    return float(f)


def _apply_creation(vec: np.ndarray, num_modes: int, j: int) -> np.ndarray:
    n = np.arange(1 << num_modes)
    src = n[(n >> j & 1) == 0]
    pc = _popcounts(num_modes)
    sign = 1.0 - 2.0 * (pc[src & ((1 << j) - 1)] & 1)
    out = np.zeros_like(vec)
    out[src | (1 << j)] = sign * vec[src]
    return out


def _apply_annihilation(vec: np.ndarray, num_modes: int, j: int) -> np.ndarray:
    n = np.arange(1 << num_modes)
    src = n[(n >> j & 1) == 1]
    pc = _popcounts(num_modes)
    sign = 1.0 - 2.0 * (pc[src & ((1 << j) - 1)] & 1)
    out = np.zeros_like(vec)
    out[src & ~(1 << j)] = sign * vec[src]
    return out


def majorana_correlation(state: FockState) -> np.ndarray:
    """Exact Majorana two-point matrix ⟨a_k a_l⟩ − δ_kl (complex 2M×2M).

    Majorana convention: a_{2j} = c_j + c_j†, a_{2j+1} = −i(c_j − c_j†).
    Computed by brute-force operator application, independent of any
    correlation-matrix bookkeeping, so it can pin the Gaussian backend.
    """
    M = state.num_modes
    psi = state.amplitudes
    vecs = []
    for j in range(M):
        lo = _apply_annihilation(psi, M, j)
        hi = _apply_creation(psi, M, j)
        vecs.append(lo + hi)
        vecs.append(-1j * (lo - hi))
    V = np.array(vecs)
    gram = V.conj() @ V.T  # ⟨a_k ψ, a_l ψ⟩ = ⟨ψ| a_k a_l |ψ⟩, a_k hermitian
    return gram - np.eye(2 * M)
