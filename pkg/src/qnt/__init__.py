"""Quantum network tomography of star networks.

Simulates the Multicast distribution circuit under per-link Pauli noise,
estimates link parameters from end-node measurements, and computes Fisher
information bounds and Monte Carlo error curves.
"""

__version__ = "0.1.0"

from .estimators import (
    DepolarizingGHZEstimator,
    DepolarizingZEstimator,
    EstimateSet,
    FlipStarEstimator,
    MomentStatistics,
    empirical_moments,
    estimate_depolarizing_ghz,
    estimate_depolarizing_z,
    estimate_flip_star,
    exact_moments,
)
from .fisher import FisherMatrix, classical_fim, qcrb, qfim_general
from .multicast import (
    MeasurementDatabase,
    OutcomeDistribution,
    distribution,
    ghz_distribution,
    sample,
    z_distribution,
)
from .network import (
    BitFlip,
    Depolarizing,
    GeneralPauli,
    PauliProbs,
    StarNetwork,
    depolarizing_to_flip,
    flip_probability,
    flip_to_depolarizing,
    pauli_probs,
    phase_flip_probability,
)
from .oracle import build_state, ghz_basis, measure_distribution

__all__ = [
    "BitFlip",
    "Depolarizing",
    "DepolarizingGHZEstimator",
    "DepolarizingZEstimator",
    "EstimateSet",
    "FisherMatrix",
    "FlipStarEstimator",
    "GeneralPauli",
    "MeasurementDatabase",
    "MomentStatistics",
    "OutcomeDistribution",
    "PauliProbs",
    "StarNetwork",
    "build_state",
    "classical_fim",
    "depolarizing_to_flip",
    "distribution",
    "empirical_moments",
    "estimate_depolarizing_ghz",
    "estimate_depolarizing_z",
    "estimate_flip_star",
    "exact_moments",
    "flip_probability",
    "flip_to_depolarizing",
    "ghz_basis",
    "ghz_distribution",
    "measure_distribution",
    "pauli_probs",
    "phase_flip_probability",
    "qcrb",
    "qfim_general",
    "sample",
    "z_distribution",
]
