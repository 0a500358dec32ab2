"""Occupation-number spectra and Pauli-polytope pinning analysis for
harmonically interacting fermions in anisotropic traps."""

from .model import (
    Configuration,
    CouplingParams,
    GroundStateSpec,
    SystemSpec,
    derive_couplings,
    ground_configuration,
)
from .spectral import (
    Spectrum,
    TruncatedSpectrum,
    bosonic_spectrum_closed_form,
    natural_occupations,
    product_spectrum,
    truncate_spectrum,
)

__all__ = [
    "Configuration",
    "CouplingParams",
    "GroundStateSpec",
    "SystemSpec",
    "Spectrum",
    "TruncatedSpectrum",
    "derive_couplings",
    "ground_configuration",
    "natural_occupations",
    "bosonic_spectrum_closed_form",
    "product_spectrum",
    "truncate_spectrum",
]

__version__ = "0.1.0"
