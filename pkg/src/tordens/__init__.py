"""Density estimation on a torus window from empirical characteristic moments.

The pipeline: draw or load samples confined to [-pi, pi]^d, average
complex exponentials into empirical moments, solve the truncated
convolution-exponential moment-matching system for the energy coefficients
of a canonical-ensemble density, then reconstruct the density and its
mean/covariance by quadrature.
"""

__version__ = "0.1.0"

from .algebra import (
    CoefficientField,
    Window,
    conv_exp_truncated,
    conv_power,
    convolve,
    hermitian_project,
    l1_norm,
)
from .density import (
    DensityEstimate,
    GridSpec,
    cross_entropy,
    evaluate_density,
    evaluate_energy,
    gradient_cross_entropy,
    integrate_density,
    log_density_fourier_oracle,
    moments_from_density,
    partial_sum_l1_distance,
)
from .empirical import Dataset, MomentAccumulator, MomentField, empirical_moments
from .solver import (
    SolverConfig,
    SolverReport,
    forward_moments,
    jacobian,
    newton_solve,
    residual,
    solve_independent,
)
from .synth import GaussianSpec, gaussian_char, sample_truncated_gaussian, sample_uniform

__all__ = [
    "CoefficientField",
    "Window",
    "convolve",
    "conv_power",
    "conv_exp_truncated",
    "l1_norm",
    "hermitian_project",
    "Dataset",
    "MomentField",
    "MomentAccumulator",
    "empirical_moments",
    "SolverConfig",
    "SolverReport",
    "forward_moments",
    "residual",
    "jacobian",
    "newton_solve",
    "solve_independent",
    "DensityEstimate",
    "GridSpec",
    "evaluate_energy",
    "evaluate_density",
    "integrate_density",
    "moments_from_density",
    "log_density_fourier_oracle",
    "cross_entropy",
    "gradient_cross_entropy",
    "partial_sum_l1_distance",
    "GaussianSpec",
    "sample_truncated_gaussian",
    "gaussian_char",
    "sample_uniform",
]
