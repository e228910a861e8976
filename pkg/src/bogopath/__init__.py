"""Numerical toolkit for the periodic Gaussian path measure of the harmonic
oscillator: closed-form kernels and functional integrals, path sampling,
functional quadrature exact on polynomials, trajectory statistics, semigroup
and Feynman-Kac dynamics, and equilibrium inequalities."""

from .params import MeasureParams, ParameterError
from .kernel import DomainError, covariance, eigen_system, grid_covariance
from .sampler import EstimateReport, PathSample, estimate, sample_finite, sample_kl

__all__ = [
    "MeasureParams", "ParameterError", "DomainError",
    "covariance", "eigen_system", "grid_covariance",
    "PathSample", "EstimateReport", "estimate", "sample_finite", "sample_kl",
]

__version__ = "0.1.0"
