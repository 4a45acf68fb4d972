"""Chain models, random frames, and the elliptic-integral helpers."""
import math

import numpy as np
import pytest

from fermiswap.models import (ChainSpec, DegenerateFermiLevel, counterexample_orbitals,
                              eisler_level_spacing, elliptic_K,
                              ground_state_orbitals, random_slater)
from fermiswap.slater import correlation_submatrix, entanglement_spectrum


def test_chain_spec_validation():
    spec = ChainSpec(6, 0.5)
    assert spec.filling == 3
    assert ChainSpec(6, 0.0, 2).filling == 2
    with pytest.raises(ValueError):
        ChainSpec(1)
    with pytest.raises(ValueError):
        ChainSpec(4, 0.0, 0)
    with pytest.raises(ValueError):
        ChainSpec(4, 0.0, 5)


def test_hamiltonian_structure():
    h = ChainSpec(5, 0.7).hamiltonian()
    assert np.allclose(h, h.T)
    assert np.allclose(np.diag(h), [-0.7, 0.7, -0.7, 0.7, -0.7])
    assert h[0, 1] == -0.5 and h[3, 4] == -0.5
    assert h[0, 2] == 0.0


def test_ground_state_orbitals_fill_the_lowest_levels():
    spec = ChainSpec(8, 0.4)
    phi = ground_state_orbitals(spec)
    assert phi.N == 4 and phi.L == 8
    assert phi.orthonormality_defect() < 1e-12
    h = spec.hamiltonian()
    vals = np.linalg.eigvalsh(h)
    energies = np.sort(np.real(np.diag(phi.entries.conj() @ h @ phi.entries.T)))
    assert np.allclose(energies, vals[:4], atol=1e-10)


def test_degenerate_fermi_level_is_a_value_error():
    assert issubclass(DegenerateFermiLevel, ValueError)


def test_random_slater_reproducible_and_orthonormal():
    a = random_slater(7, 3, 42)
    b = random_slater(7, 3, 42)
    assert np.array_equal(a.entries, b.entries)
    assert a.orthonormality_defect() < 1e-12
    c = random_slater(7, 3, 43)
    assert not np.allclose(a.entries, c.entries)
    with pytest.raises(ValueError):
        random_slater(3, 4, 0)
    with pytest.raises(ValueError):
        random_slater(3, 0, 0)


def test_counterexample_is_a_valid_state():
    phi = counterexample_orbitals()
    assert phi.is_half_filled
    assert phi.orthonormality_defect() < 1e-12


def _quadrature_K(k: float) -> float:
    # Gauss-Legendre integration of the defining integral, independent of
    # the arithmetic-geometric mean
    x, w = np.polynomial.legendre.leggauss(120)
    theta = 0.25 * math.pi * (x + 1.0)
    vals = 1.0 / np.sqrt(1.0 - (k * np.sin(theta)) ** 2)
    return 0.25 * math.pi * float(np.dot(w, vals))


def test_elliptic_K_special_values():
    assert abs(elliptic_K(0.0) - math.pi / 2.0) < 1e-14
    # K(1/sqrt 2) has a closed form through the gamma function
    lemniscatic = math.gamma(0.25) ** 2 / (4.0 * math.sqrt(math.pi))
    assert elliptic_K(1.0 / math.sqrt(2.0)) == pytest.approx(lemniscatic, abs=1e-14)


def test_elliptic_K_against_quadrature():
    for k in (0.1, 0.3, 0.5, 0.7, 0.9, 0.97):
        assert elliptic_K(k) == pytest.approx(_quadrature_K(k), abs=1e-12)


def test_elliptic_K_domain():
    with pytest.raises(ValueError):
        elliptic_K(1.0)
    with pytest.raises(ValueError):
        elliptic_K(-0.1)


def test_eisler_spacing_values():
    assert abs(eisler_level_spacing(1.0) - 2.0 * math.pi) < 1e-12
    grid = [eisler_level_spacing(m) for m in (0.3, 0.5, 1.0, 1.5, 2.0)]
    assert all(b > a for a, b in zip(grid, grid[1:]))
    with pytest.raises(ValueError):
        eisler_level_spacing(0.0)


def test_half_chain_entanglement_levels_sit_on_the_ladder():
    """The massive chain's positive levels approach (2k + 1/2) times the
    asymptotic spacing; only the lowest few stay within float range."""
    for m0 in (1.0, 1.5):
        phi = ground_state_orbitals(ChainSpec(16, m0))
        spec = entanglement_spectrum(correlation_submatrix(phi, range(8)))
        eps = spec.eps[np.isfinite(spec.eps)]
        pos = np.sort(eps[eps > 0])
        bar = eisler_level_spacing(m0)
        for k in (0, 1):
            ladder = (2 * k + 0.5) * bar
            assert abs(pos[k] - ladder) / ladder < 1e-3, (m0, k, pos[k], ladder)
        assert abs((pos[1] - pos[0]) - 2.0 * bar) / (2.0 * bar) < 1e-3
