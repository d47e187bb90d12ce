"""Bivariate measures, disintegrations, finite Koopman models and measure-class fingerprints."""

from .exact import GaussianRational
from .measures import (
    BivariateMeasure,
    DisintegrationFibers,
    FiberProfile,
    PolarizationReport,
    bivariate_coefficient_energy,
    cyclic_kernel,
    disintegrate,
    eta_from_vectors,
    fiber_energy_identity,
    fiber_mass_identity,
    fiber_mixing_profile,
    polarization_check,
    polarization_from_vectors,
)
from .fingerprint import MeasureClassFingerprint, compare, fingerprint, geometric_weights
from .koopman import (
    FiniteKoopmanModel,
    SpectralType,
    eta_alpha,
    fiber_expectation_identity,
    maximal_spectral_type,
    snag_identity_check,
    subgroup_absolute_continuity,
    transport_S,
    transport_identity_defect,
)
