"""Winding-number statistics of a parametric chiral random-matrix field.

Exact distributions, correlators and unfolding limits cross-validated
against Monte Carlo simulation of the matrix model.
"""

__version__ = "0.1.0"

from .analytic import (
    WindingDistribution,
    beta_uv,
    c1,
    c2,
    ck_assemble,
    gaussian_approx,
    k_point_connected,
    l_function,
    mean_level_spacing,
    moment_quadrature,
    n_point_connected,
    rescaled_c2,
    unfolded_f2,
    variance_analytic,
    winding_distribution,
    winding_distribution_permutation_sum,
)
from .ensemble import (
    ParametricField,
    SphericalSpectrum,
    build_hamiltonian,
    chiral_operator,
    field_derivative,
    field_evaluate,
    joint_density,
    log_joint_density,
    sample_field,
    sample_ginibre,
    substream,
)
from .errors import (
    CoincidentPointsError,
    ContourRefinementError,
    EigenConvergenceError,
    IllConditionedError,
    SingularFieldError,
    WindingError,
)
from .montecarlo import (
    CorrelationGrid,
    DistributionEstimate,
    MomentEstimate,
    RunConfig,
    coincident_c2_diagnostic,
    estimate_ck,
    estimate_distribution,
    estimate_moments,
)
from .spectral import (
    ILL_CONDITIONED,
    NEAR_UNIT_CIRCLE,
    ContourGrid,
    WindingSample,
    circle_spectrum,
    condition_estimate,
    eigenvalues,
    spherical_spectrum,
    winding_contour,
    winding_density,
    winding_density_from_spectrum,
    winding_from_count,
)

__all__ = [
    "__version__",
    # ensemble
    "ParametricField",
    "SphericalSpectrum",
    "substream",
    "sample_ginibre",
    "sample_field",
    "field_evaluate",
    "field_derivative",
    "build_hamiltonian",
    "chiral_operator",
    "joint_density",
    "log_joint_density",
    # spectral
    "WindingSample",
    "ContourGrid",
    "NEAR_UNIT_CIRCLE",
    "ILL_CONDITIONED",
    "eigenvalues",
    "condition_estimate",
    "spherical_spectrum",
    "circle_spectrum",
    "winding_from_count",
    "winding_density",
    "winding_density_from_spectrum",
    "winding_contour",
    # analytic
    "WindingDistribution",
    "beta_uv",
    "l_function",
    "n_point_connected",
    "k_point_connected",
    "c1",
    "c2",
    "ck_assemble",
    "unfolded_f2",
    "rescaled_c2",
    "mean_level_spacing",
    "winding_distribution",
    "winding_distribution_permutation_sum",
    "variance_analytic",
    "moment_quadrature",
    "gaussian_approx",
    # montecarlo
    "RunConfig",
    "DistributionEstimate",
    "CorrelationGrid",
    "MomentEstimate",
    "estimate_distribution",
    "estimate_ck",
    "estimate_moments",
    "coincident_c2_diagnostic",
    # errors
    "WindingError",
    "IllConditionedError",
    "SingularFieldError",
    "ContourRefinementError",
    "EigenConvergenceError",
    "CoincidentPointsError",
]
