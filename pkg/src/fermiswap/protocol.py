"""Bilayer measurement protocols on either backend.

The protocol doubles a Slater state into an upper and a lower layer,
projects a set of rungs onto a single-occupancy pair state, and asks for
the outcome probability, the entropy of the unmeasured region of a
single layer (the A_R cut), and, when half of the rungs are measured,
the fidelity to the predicted product of pair states.

Backends: "oracle" builds the dense 2^(2L) vector and projects rung by
rung; "gaussian" works with Majorana correlation matrices and scales to
larger L.  "auto" picks the oracle whenever the dense vector fits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np

from . import fock, gaussian
from .models import ChainSpec, ground_state_orbitals, random_slater
from .rungs import RungProjector
from .slater import OrbitalMatrix, as_orbitals, postselect_probability

ZERO_PROBABILITY = 1e-12
_BELL_TOL = 1e-12

# Threshold for runs whose outcome probability is genuinely tiny but valid.
# Half-system measurements of massive-chain bilayers succeed with
# P ~ exp(-c L^2), far below the ZERO_PROBABILITY flag long before the
# simulation itself loses accuracy, so those paths flag only at the float
# underflow floor.
UNDERFLOW_PROBABILITY = 1e-300


@dataclass(frozen=True)
class ProtocolResult:
    """Outcome of one projective run.

    post_state is a FockState (oracle) or MajoranaCorrelation (gaussian),
    or None when the outcome was flagged as zero probability.  entropies
    maps cut names to nats; the "unmeasured_upper" cut is the unmeasured
    region of the upper layer against everything else.
    """

    backend: str
    L: int
    measured: Tuple[int, ...]
    projector: RungProjector
    probability: float
    post_state: Union[fock.FockState, gaussian.MajoranaCorrelation, None]
    entropies: Dict[str, float]
    fidelity_to_ideal: Optional[float] = None

    def __post_init__(self):
        if not -1e-12 <= self.probability <= 1.0 + 1e-9:
            raise ValueError(f"probability {self.probability} outside [0, 1]")
        for name, s in self.entropies.items():
            if s < -1e-10:
                raise ValueError(f"negative entropy {s} for cut {name!r}")

    @property
    def n_measured(self) -> int:
        return len(self.measured)

    @property
    def unmeasured(self) -> Tuple[int, ...]:
        picked = set(self.measured)
        return tuple(i for i in range(self.L) if i not in picked)

    @property
    def zero_probability(self) -> bool:
        return self.post_state is None


def _resolve_backend(backend: str, L: int) -> str:
    if backend == "auto":
        return "oracle" if 2 * L <= fock.MAX_MODES else "gaussian"
    if backend in ("oracle", "gaussian"):
        return backend
    raise ValueError(f"unknown backend {backend!r}")


def _check_measured(measured: Iterable[int], L: int) -> Tuple[int, ...]:
    out = tuple(sorted(set(int(i) for i in measured)))
    if out and not (0 <= out[0] and out[-1] < L):
        raise ValueError(f"measured rungs {out} out of range for L={L}")
    return out


def _is_bell(proj: RungProjector) -> bool:
    r = 1.0 / np.sqrt(2.0)
    return (abs(proj.alpha - r) < _BELL_TOL
            and min(abs(proj.beta - r), abs(proj.beta + r)) < _BELL_TOL)


def ideal_bell_orbitals(L: int, measured: Iterable[int],
                        proj_measured: RungProjector,
                        proj_complement: RungProjector) -> OrbitalMatrix:
    """Orbital rows of the rung-product state: one orbital per rung.

    Rung i contributes the orbital α e_i + β e_{L+i}, so the product of
    pair states is itself a Slater determinant at filling L.
    """
    measured = _check_measured(measured, L)
    picked = set(measured)
    rows = np.zeros((L, 2 * L), dtype=complex)
    for i in range(L):
        p = proj_measured if i in picked else proj_complement
        rows[i, i] = p.alpha
        rows[i, L + i] = p.beta
    return OrbitalMatrix(rows)


def ideal_bell_product(L: int, measured: Iterable[int],
                       proj_measured: RungProjector,
                       proj_complement: RungProjector) -> fock.FockState:
    """Dense ⊗_i |pair_i⟩ with creation operators applied in rung order."""
    measured = _check_measured(measured, L)
    if 2 * L > fock.MAX_MODES:
        raise fock.CapacityError(f"2L={2 * L} exceeds the dense cap of {fock.MAX_MODES}")
    picked = set(measured)
    vec = np.zeros(1 << (2 * L), dtype=complex)
    vec[0] = 1.0
    for i in range(L):
        p = proj_measured if i in picked else proj_complement
        vec = (p.alpha * fock._apply_creation(vec, 2 * L, i)
               + p.beta * fock._apply_creation(vec, 2 * L, L + i))
    return fock.FockState(2 * L, vec)


def ideal_bell_product_gamma(L: int, measured: Iterable[int],
                             proj_measured: RungProjector,
                             proj_complement: RungProjector) -> gaussian.MajoranaCorrelation:
    return gaussian.gamma_from_orbitals(
        ideal_bell_orbitals(L, measured, proj_measured, proj_complement))


def dense_gamma(state: fock.FockState) -> gaussian.MajoranaCorrelation:
    """Majorana correlation matrix of a dense state, for backend checks."""
    G = fock.majorana_correlation(state)
    R = -1j * G
    imag = float(np.max(np.abs(R.imag)))
    if imag > 1e-9:
        raise ValueError(f"dense correlation matrix not real (residual {imag:.3e})")
    return gaussian.MajoranaCorrelation(R.real)


def _flagged(backend: str, L: int, measured: Tuple[int, ...],
             proj: RungProjector, probability: float) -> ProtocolResult:
    return ProtocolResult(backend=backend, L=L, measured=measured, projector=proj,
                          probability=max(probability, 0.0), post_state=None,
                          entropies={}, fidelity_to_ideal=None)


def _measure_oracle(up: OrbitalMatrix, lo: OrbitalMatrix, measured: Tuple[int, ...],
                    proj: RungProjector, zero_tol: float) -> ProtocolResult:
    L = up.L
    upper_state = fock.build_slater_state(up)
    lower_state = upper_state if lo is up else fock.build_slater_state(lo)
    state = fock.tensor_double(upper_state, lower_state)
    prob = 1.0
    for i in measured:
        state, p = fock.apply_rung_projector(state, i, proj)
        prob *= p
        if prob < zero_tol:
            return _flagged("oracle", L, measured, proj, prob)
        state = state.normalize()

    unmeasured = [i for i in range(L) if i not in set(measured)]
    entropy = fock.entanglement_entropy(state, unmeasured) if unmeasured else 0.0
    fid = None
    if 2 * len(measured) == L:
        ideal = ideal_bell_product(L, measured, proj, proj.orthogonal())
        fid = fock.fidelity(state, ideal)
    return ProtocolResult(backend="oracle", L=L, measured=measured, projector=proj,
                          probability=prob, post_state=state,
                          entropies={"unmeasured_upper": entropy},
                          fidelity_to_ideal=fid)


def _measure_gaussian(up: OrbitalMatrix, lo: OrbitalMatrix, measured: Tuple[int, ...],
                      proj: RungProjector, zero_tol: float) -> ProtocolResult:
    L = up.L
    g_up = gaussian.gamma_from_orbitals(up)
    g_lo = g_up if lo is up else gaussian.gamma_from_orbitals(lo)
    g_post = gaussian.gamma_double(g_up, g_lo)
    n_m = len(measured)

    # Rungs are projected one at a time, exactly like the oracle: the
    # conditional probabilities stay far better conditioned than the full
    # product, and the purity of the post state is restored after each
    # composition.  The cumulative probability is checked before every
    # composition, so the projector sandwich never sees a conditional
    # below zero_tol.
    log_zero = np.log(zero_tol)
    log_prob = 0.0
    for i in measured:
        g_rung = gaussian.projector_gamma(L, (i,), proj)
        log_prob += gaussian.outcome_log_probability(g_post, g_rung, 1)
        if log_prob < log_zero:
            return _flagged("gaussian", L, measured, proj, float(np.exp(log_prob)))
        g_post = gaussian.post_measurement_gamma(g_post, g_rung, assume_pure=True)

    if 2 * n_m == L and lo is up and _is_bell(proj):
        # Half-system Bell measurement of two equal layers: the outcome
        # probability is the squared product of the two complementary
        # minors of the single-layer orbitals.
        prob = postselect_probability(up, measured).probability
    else:
        prob = float(np.exp(log_prob))
    unmeasured = [i for i in range(L) if i not in set(measured)]
    entropy = gaussian.entropy_from_gamma(g_post, unmeasured) if unmeasured else 0.0
    fid = None
    if 2 * n_m == L:
        ideal = ideal_bell_product_gamma(L, measured, proj, proj.orthogonal())
        fid = gaussian.gaussian_fidelity(g_post, ideal)
    return ProtocolResult(backend="gaussian", L=L, measured=measured, projector=proj,
                          probability=float(prob), post_state=g_post,
                          entropies={"unmeasured_upper": entropy},
                          fidelity_to_ideal=fid)


def _measure_bilayer(phi_upper, phi_lower, measured, proj: RungProjector,
                     backend: str, zero_tol: float = ZERO_PROBABILITY) -> ProtocolResult:
    up = as_orbitals(phi_upper)
    lo = up if phi_lower is None else as_orbitals(phi_lower)
    if lo.L != up.L:
        raise ValueError("layers must have equal site counts")
    if not zero_tol > 0.0:
        raise ValueError(f"zero_tol must be positive, got {zero_tol}")
    measured = _check_measured(measured, up.L)
    chosen = _resolve_backend(backend, up.L)
    if chosen == "oracle":
        return _measure_oracle(up, lo, measured, proj, zero_tol)
    return _measure_gaussian(up, lo, measured, proj, zero_tol)


def run_uniform_measurement(phi, measured, proj: RungProjector,
                            backend: str = "auto",
                            zero_tol: float = ZERO_PROBABILITY) -> ProtocolResult:
    """Project every rung in `measured` of the doubled state onto proj.

    Returns the outcome probability, the post state (on the selected
    backend), the entropy of the unmeasured single-layer region, and the
    fidelity to ⊗_measured proj ⊗_unmeasured proj.orthogonal() whenever
    exactly half the rungs are measured.  A probability below zero_tol
    (default 1e-12) is flagged and no post state is produced.
    """
    return _measure_bilayer(phi, None, measured, proj, backend, zero_tol)


@dataclass(frozen=True)
class FillingReport:
    """Outcome probabilities of a half-system Bell measurement vs filling."""

    L: int
    measured: Tuple[int, ...]
    probabilities: Dict[int, float]
    passed: bool


def check_filling_selection(L: int, measured, seed: int = 0,
                            backend: str = "auto") -> FillingReport:
    """Sweep the particle number N at fixed L with random orbital frames.

    Half-system uniform Bell measurements only ever succeed at half
    filling: for N != L/2 the outcome probability must fall below 1e-12,
    while N = L/2 keeps a generically nonzero probability.
    """
    measured = _check_measured(measured, L)
    if 2 * len(measured) != L:
        raise ValueError(f"need exactly L/2 measured rungs, got {len(measured)} of L={L}")
    proj = RungProjector.bell_plus()
    rng = np.random.default_rng(seed)
    probabilities = {}
    passed = True
    for N in range(1, L):
        phi = random_slater(L, N, rng)
        res = _measure_bilayer(phi, None, measured, proj, backend)
        probabilities[N] = res.probability
        if 2 * N != L and res.probability >= ZERO_PROBABILITY:
            passed = False
        if 2 * N == L and res.probability < ZERO_PROBABILITY:
            passed = False
    return FillingReport(L=L, measured=measured, probabilities=probabilities,
                         passed=passed)


@dataclass(frozen=True)
class EntropySample:
    measured: Tuple[int, ...]
    entropy_nats: float
    probability: float


@dataclass(frozen=True)
class EntropySamples:
    n_measured: int
    requested_trials: int
    samples: Tuple[EntropySample, ...]
    excluded: int


def partial_measurement_entropy(phi, n_m: int, proj: RungProjector,
                                trials: int = 8, seed: int = 0,
                                backend: str = "auto") -> EntropySamples:
    """Measure n_m randomly chosen rungs and collect S(unmeasured upper).

    Each trial draws a fresh measured set of size n_m; zero-probability
    outcomes are excluded and counted.  For half-filled initial states
    every kept sample lands on n_m times the single-rung entropy of the
    projector, whatever the choice of measured rungs.
    """
    up = as_orbitals(phi)
    if not 0 <= n_m <= up.L:
        raise ValueError(f"n_m={n_m} out of range for L={up.L}")
    rng = np.random.default_rng(seed)
    samples = []
    excluded = 0
    for _ in range(trials):
        measured = tuple(sorted(rng.choice(up.L, size=n_m, replace=False).tolist()))
        res = _measure_bilayer(up, None, measured, proj, backend)
        if res.zero_probability:
            excluded += 1
            continue
        samples.append(EntropySample(measured=measured,
                                     entropy_nats=res.entropies["unmeasured_upper"],
                                     probability=res.probability))
    return EntropySamples(n_measured=n_m, requested_trials=trials,
                          samples=tuple(samples), excluded=excluded)


def imperfect_copy_run(spec: ChainSpec, dm: float,
                       backend: str = "auto") -> ProtocolResult:
    """Bell-measure the left half of a bilayer whose copies differ in mass.

    The upper layer is the ground state at mass spec.m0, the lower one at
    spec.m0 + dm.  At dm = 0 this is the exact swapping protocol; at
    dm > 0 the fidelity to the ideal pair product drops below one.

    Massive chains succeed with probability ~ exp(-c L^2), so the outcome
    is excluded only at the underflow floor rather than at the ordinary
    zero-probability threshold.
    """
    if spec.L % 2:
        raise ValueError("imperfect-copy runs need an even number of sites")
    upper = ground_state_orbitals(spec)
    lower = ground_state_orbitals(ChainSpec(spec.L, spec.m0 + dm, spec.filling))
    measured = tuple(range(spec.L // 2))
    return _measure_bilayer(upper, lower, measured, RungProjector.bell_plus(),
                            backend, zero_tol=UNDERFLOW_PROBABILITY)
