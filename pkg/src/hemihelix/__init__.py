"""Hemihelical branches of a clamped Kirchhoff rod with intrinsic curvature."""

from .bifurcation import (
    BifurcationData,
    BranchPoint,
    coefficients_closed,
    coefficients_numeric,
    continue_branch,
    count_stationary,
    critical_force,
    critical_force_numeric,
    energy_gap,
    kernel_mode,
    reduced_curvature,
)
from .rod_model import (
    BISTRIP_CONSTANTS,
    TOY_CONSTANTS,
    CardanPath,
    ElasticConstants,
    RotationPath,
    angular_strain,
    cardan_to_rotation,
    centerline,
    energy_cardan,
    energy_rotation,
    integrand,
    rotation_to_cardan,
)
from .solver import SolveReport, minimize, newton_solve
from .spectral import SpectralResult, constrained_spectrum
from .variational import el_residual_strong, gradient, hessian, linearized_identity, mass_matrix

__version__ = "0.1.0"
