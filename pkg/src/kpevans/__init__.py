"""Transverse spectral instability of periodic gKdV waves in the gKP equation.

Pipeline: construct a periodic traveling-wave profile of
u_t = u_xxx + f(u)_x from its integration constants (a, E, c), evaluate the
periodic Evans function D(mu, k, lambda) of the transverse spectral
problem, and decide long-wavelength transverse instability from the
orientation index sigma * {T, M}_{a,E}, with every supporting identity
(kernel relations, low/high frequency asymptotics, block conjugation)
verifiable numerically.
"""

from .asymptotics import (HighFreqReport, IndexVerdict, LowFreqReport,
                          high_freq_sign, low_freq_coefficient,
                          lower_left_slope, orientation_index,
                          verify_block_reduction)
from .conserved import (GradientSet, InvariantSet, compute_invariants,
                        gradient_identity_residual, gradients, jacobian_TM,
                        kdv_jacobian_closed_form, profile_invariants)
from .elliptic import (EllipticModulus, complete_E, complete_K,
                       jacobi_elliptic)
from .evans import (EvansValue, Monodromy, ScanReport, SpectralPoint,
                    coefficient_matrix, evans, evans_scan, monodromy)
from .kernel import (KernelBasis, WMatrix, build_W, kernel_residuals,
                     phi_solution, variational_solutions,
                     verify_inverse_column)
from .model import NonlinearitySpec, WaveParams, eval_V, eval_f
from .tracking import (BlockSystem, Conjugator, conjugation_residual,
                       period_map, solve_conjugator, triangularized_blocks)
from .wave import (WaveProfile, cnoidal_wave, compute_period,
                   find_turning_points, integrate_profile, phase_align)

__version__ = "0.1.0"

__all__ = [
    "NonlinearitySpec", "WaveParams", "eval_f", "eval_V",
    "WaveProfile", "find_turning_points", "compute_period",
    "integrate_profile", "cnoidal_wave", "phase_align",
    "EllipticModulus", "jacobi_elliptic", "complete_K", "complete_E",
    "InvariantSet", "GradientSet", "compute_invariants", "profile_invariants",
    "gradients", "gradient_identity_residual", "jacobian_TM",
    "kdv_jacobian_closed_form",
    "KernelBasis", "WMatrix", "variational_solutions", "phi_solution",
    "build_W", "verify_inverse_column", "kernel_residuals",
    "SpectralPoint", "Monodromy", "EvansValue", "ScanReport",
    "coefficient_matrix", "monodromy", "evans", "evans_scan",
    "HighFreqReport", "LowFreqReport", "IndexVerdict",
    "high_freq_sign", "verify_block_reduction", "lower_left_slope",
    "low_freq_coefficient", "orientation_index",
    "BlockSystem", "Conjugator", "solve_conjugator", "triangularized_blocks",
    "conjugation_residual", "period_map",
]
