"""Collisional phase-gate simulator for neutral atoms in a spin-dependent
optical lattice: protocol sequences, an exact state-vector engine, fringe
and interference analysis, stabilizer-level cluster verification, noise
channels, and site-percolation estimates of defect-limited cluster sizes.
"""

import os as _os

# LATTICEGATE_THREADS caps the BLAS/OpenMP pools; it must be applied before
# numpy first loads, which is why it lives at the top of the package.
_threads = _os.environ.get("LATTICEGATE_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .errors import (CalibrationError, CapacityError, ConfigError, DomainError,
                     EstimationError, FitError, LatticeGateError, ProtocolError)
from .physics import (CONSTANTS, HBAR, PLANCK, RB87_MASS, CalibrationModel,
                      LatticeAxis, PhysicalConstants, calibrate_affine,
                      phase_from_hold, potential_pair, recoil_energy,
                      standard_calibration, trap_frequency, well_separation)
from .sequence import (FREEZE, RETURN, Instruction, PulseSequence,
                       build_delocalize_sequence, build_return_sequence, hold,
                       rotate, sequence_from_text, sequence_to_text, shift,
                       validate)
from .statevec import (ManyBodyState, apply_readout, entanglement_entropy,
                       global_phase_distance, probability_one,
                       probability_one_per_atom, reduced_density, run,
                       sample_counts, stabilizer_check, states_equal)
from .noise import (IDEAL, NoiseModel, apply_pulse_error, ensemble_average,
                    make_rng, sample_vacancies)
from .analysis import (FitResult, FringeData, InterferogramModel, ScanPoint,
                       compute_interferogram, fit_sinusoid,
                       interference_pattern, interference_visibility_curve,
                       pattern_contrast, ramsey_scan, visibility_curve,
                       write_scan_csv)
from .clifford import (ClusterGraph, SiteLattice, StabilizerTableau,
                       component_sizes, generate_cluster, verify_generators)
from .percolation import (PercolationTrial, ThresholdEstimate,
                          cluster_size_stats, estimate_threshold, run_trial)

__version__ = "0.1.0"
