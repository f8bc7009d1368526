"""Exponential Euler / spectral Galerkin toolkit for the stochastic heat equation
with additive noise, with exact weak-error bookkeeping."""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, FitError, IntegrationError, RangeError
from .spectral import (
    SpectralVector,
    apply_fractional_power,
    apply_inverse_semigroup,
    apply_semigroup,
    eigenvalue,
    project,
    smoothing_bound_check,
    sobolev_norm,
)
from .rng import SeedPath
from .noise import CovarianceSpec, NoiseIncrement
from .nemytskij import CollocationGrid, NemytskijSpec, catalog
from .scheme import SchemeConfig, integrate, step
from .kolmogorov import GaussianState, KolmogorovField, TestFunctional

__all__ = [
    "CollocationGrid",
    "ConfigError",
    "CovarianceSpec",
    "DomainError",
    "FitError",
    "GaussianState",
    "IntegrationError",
    "KolmogorovField",
    "NemytskijSpec",
    "NoiseIncrement",
    "RangeError",
    "SchemeConfig",
    "SeedPath",
    "SpectralVector",
    "TestFunctional",
    "apply_fractional_power",
    "apply_inverse_semigroup",
    "apply_semigroup",
    "catalog",
    "eigenvalue",
    "integrate",
    "project",
    "smoothing_bound_check",
    "sobolev_norm",
    "step",
]
