"""Reference single-particle models and special-function helpers.

The staggered-mass open chain h = -(1/2)Σ(c†_s c_{s+1} + h.c.) +
m0 Σ (-1)^{s+1} c†_s c_s (sites 0-based, so the on-site energies read
[-m0, +m0, -m0, ...]) supplies ground states with known entanglement
structure; random Slater states come from Haar-distributed orbital
frames.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .slater import OrbitalMatrix

_GAP_TOL = 1e-10


class DegenerateFermiLevel(ValueError):
    """The requested filling cuts through a (near-)degenerate pair."""


@dataclass(frozen=True)
class ChainSpec:
    """Open staggered-mass hopping chain on L sites."""

    L: int
    m0: float = 0.0
    filling: Optional[int] = None

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"need at least two sites, got L={self.L}")
        n = self.L // 2 if self.filling is None else int(self.filling)
        if not (0 < n <= self.L):
            raise ValueError(f"filling {n} out of range for L={self.L}")
        object.__setattr__(self, "filling", n)

    def hamiltonian(self) -> np.ndarray:
        h = np.zeros((self.L, self.L))
        for s in range(self.L - 1):
            h[s, s + 1] = h[s + 1, s] = -0.5
        for s in range(self.L):
            h[s, s] = self.m0 * (-1.0) ** (s + 1)
        return h


def ground_state_orbitals(spec: ChainSpec) -> OrbitalMatrix:
    """Lowest-`filling` orbitals of the chain, as orthonormal rows.

    Raises DegenerateFermiLevel when the single-particle gap at the Fermi
    level is below 1e-10, since the ground state is then not a unique
    Slater determinant.
    """
    vals, vecs = np.linalg.eigh(spec.hamiltonian())
    n = spec.filling
    if n < spec.L and vals[n] - vals[n - 1] < _GAP_TOL:
        raise DegenerateFermiLevel(
            f"gap {vals[n] - vals[n - 1]:.3e} at filling {n} for L={spec.L}, "
            f"m0={spec.m0}")
    return OrbitalMatrix(vecs[:, :n].T.astype(complex))


def random_slater(L: int, N: int,
                  rng: Union[int, np.random.Generator, None] = None) -> OrbitalMatrix:
    """Haar-random N x L orthonormal orbital rows.

    QR of a complex Ginibre matrix with the R-diagonal phase fixed, which
    makes the frame Haar distributed and the draw reproducible.
    """
    if not (0 < N <= L):
        raise ValueError(f"need 0 < N <= L, got N={N}, L={L}")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    a = gen.standard_normal((L, N)) + 1j * gen.standard_normal((L, N))
    q, r = np.linalg.qr(a)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return OrbitalMatrix(q.T)


def counterexample_orbitals() -> OrbitalMatrix:
    """Half-filled four-site state whose left-half postselection vanishes.

    The second orbital is orthogonal to the first but has no weight on
    site 2, which kills the {0, 1} | {2, 3} minor product while leaving
    other equal splits nonzero.
    """
    s6 = math.sqrt(6.0)
    return OrbitalMatrix(np.array([
        [0.5, 0.5, 0.5, 0.5],
        [s6 / 6.0, s6 / 6.0, 0.0, -s6 / 3.0],
    ], dtype=complex))


def elliptic_K(k: float) -> float:
    """Complete elliptic integral of the first kind, modulus k in [0, 1).

    Arithmetic-geometric mean: K(k) = π / (2 AGM(1, √(1-k²))).
    """
    if not 0.0 <= k < 1.0:
        raise ValueError(f"modulus must lie in [0, 1), got {k}")
    a, b = 1.0, math.sqrt(1.0 - k * k)
    for _ in range(60):
        if abs(a - b) <= 1e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def eisler_level_spacing(m0: float) -> float:
    """Asymptotic spacing of the entanglement-spectrum levels ε at mass m0.

    2π K(κ') / K(κ) with κ = 1/√(1+m0²), κ' = m0/√(1+m0²); equals 2π at
    m0 = 1 and grows with the mass, so heavier chains have sparser
    spectra and faster-decaying postselection probabilities.
    """
    if m0 <= 0.0:
        raise ValueError(f"mass must be positive, got {m0}")
    root = math.sqrt(1.0 + m0 * m0)
    return 2.0 * math.pi * elliptic_K(m0 / root) / elliptic_K(1.0 / root)
