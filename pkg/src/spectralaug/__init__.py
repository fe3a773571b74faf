"""Spectral feature-map augmentation operators and their verification engine."""

__version__ = "0.1.0"

from .analysis import (AlignmentReport, PushForwardProfile, alignment_report, analytic_params,
                       generalization_bound, info_nce, lambda_analytic, lambda_direct_integral,
                       lambda_monte_carlo, lambda_quadrature, noise_bound, phi_upper_bound,
                       push_forward_profile, subspace_perturbation_check, surrogate_gap,
                       variance_analytic, variance_quadrature)
from .augmenters import (BaseAugmenter, GrassmanAugmenter, MaxExpAugmenter, PowerNormAugmenter,
                         PreconditionAugmenter, SfaAugmenter)
from .errors import DimensionMismatch, NumericalError, ValidationError
from .linalg import (SvdFactors, frobenius_norm, jacobi_eigh, lu_decompose, mat_mul,
                     randomized_svd, spectral_norm, svd_jacobi, transpose)
from .matrixio import dump_matrix, load_matrix
from .operators import (AugmentSpec, Grassman, MaxExpF, PowerNorm, Precondition, Sfa, SfaOutput,
                        apply_operator, grassman_flat, lu_precondition, maxexp_f, newton_schulz,
                        power_norm, sfa_backward, sfa_forward, spec_from_mapping, spec_to_mapping)
from .rng import RngStream, sample_gaussian
from .special import (AnalyticParams, beta_pdf, gauss_2f1, integrate, log_gamma, pdf_x_bullet)

__all__ = [
    "AlignmentReport", "AnalyticParams", "AugmentSpec", "BaseAugmenter", "DimensionMismatch",
    "Grassman", "GrassmanAugmenter", "MaxExpAugmenter", "MaxExpF", "NumericalError", "PowerNorm",
    "PowerNormAugmenter", "Precondition", "PreconditionAugmenter", "PushForwardProfile",
    "RngStream", "Sfa", "SfaAugmenter", "SfaOutput", "SvdFactors", "ValidationError",
    "alignment_report", "analytic_params", "apply_operator", "beta_pdf", "dump_matrix",
    "frobenius_norm", "gauss_2f1", "generalization_bound", "grassman_flat", "info_nce",
    "integrate", "jacobi_eigh", "lambda_analytic", "lambda_direct_integral", "lambda_monte_carlo",
    "lambda_quadrature", "load_matrix", "log_gamma", "lu_decompose", "lu_precondition", "mat_mul",
    "maxexp_f", "newton_schulz", "noise_bound", "pdf_x_bullet", "phi_upper_bound", "power_norm",
    "push_forward_profile", "randomized_svd", "sample_gaussian", "sfa_backward", "sfa_forward",
    "spec_from_mapping", "spec_to_mapping", "spectral_norm", "subspace_perturbation_check",
    "surrogate_gap", "svd_jacobi", "transpose", "variance_analytic", "variance_quadrature",
]
