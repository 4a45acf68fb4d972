"""Entanglement swapping by rung measurements on doubled free-fermion states.

Two backends verify the same protocol: a dense Fock-space oracle (up to
16 modes) and a Majorana correlation-matrix backend that scales to the
sizes the dense route cannot reach.
"""

from .rungs import RungProjector
from .slater import (OrbitalMatrix, EntanglementSpectrum, PostselectionProbability,
                     WavefunctionReport, as_orbitals, minor, postselect_probability,
                     log_postselect_probability, correlation_submatrix,
                     entanglement_spectrum, log_probability_from_spectrum,
                     plucker_single_residual, plucker_general_residual,
                     theorem1_wavefunction_checks)
from .fock import (MAX_MODES, CapacityError, FockState, ModeOrdering, vacuum_state,
                   basis_state, build_slater_state, tensor_double,
                   apply_rung_projector, apply_pair_state_projector,
                   reduced_density_matrix, entanglement_entropy, inner_product,
                   fidelity, majorana_correlation)
from .gaussian import (CompositionSingularError, MajoranaCorrelation, SubsystemSpec,
                       correlation_to_majorana, majorana_to_correlation,
                       gamma_from_orbitals, gamma_double, projector_gamma, compose,
                       post_measurement_gamma, entropy_from_gamma,
                       outcome_log_probability, outcome_probability,
                       gaussian_fidelity)
from .models import (ChainSpec, DegenerateFermiLevel, ground_state_orbitals,
                     random_slater, counterexample_orbitals, elliptic_K,
                     eisler_level_spacing)
from .protocol import (ProtocolResult, FillingReport, EntropySample, EntropySamples,
                       run_uniform_measurement, check_filling_selection,
                       partial_measurement_entropy, imperfect_copy_run,
                       ideal_bell_orbitals, ideal_bell_product,
                       ideal_bell_product_gamma, dense_gamma, ZERO_PROBABILITY,
                       UNDERFLOW_PROBABILITY)

__version__ = "0.1.0"
