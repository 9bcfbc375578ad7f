from ._version import __version__

from .exceptions import (
    DomainError, ConfigurationError, PreconditionError, AccuracyError,
    EstimationError, ConventionError
)

from .specfun import (
    legendre_P, hermite_H, hermite_function, legendre_small_angle,
    legendre_P_hypergeometric, QuadratureRule, quadrature
)

from .ensemble import (
    BandProfile, CovarianceMatrix, SpectralParams, SampleBatch,
    neumann_laplacian, covariance, spectral_params, sample, draw_matrix
)

from .correlator import (
    OffsetSpec, RatioEstimate, log_absdet_sq, theta_ratio, ratio_curve,
    theta_n1, theta_exact, ratio_exact
)

from .limits import (
    ginibre_limit, factorized_limit, multiplication_matrix, A0Matrix,
    a0_matrix, matrix_exponential, critical_limit, limit_table
)

from .transferop import (
    GaussianKernelSpec, SpectrumReport, SU2AverageSpec, a_star_1d_kernel,
    a_star_spectrum, ground_state_fit, hermite_convention_fit, lambda_ell,
    sector_eigenvalue, su2_average_t00, su2_average_t00_bessel,
    su2_normalization, schur_orthogonality_check, nu_identity_check,
    nu_matrix_elements
)

from .blockgate import (
    GateParams, GateScenario, GateReport, check_hypotheses,
    resolvent_decay_check, projection_decay_check, ct_bound, norm_bound_2x2,
    scenario_generator, run_gate_batch, run_norm_batch
)

from .config import ExperimentConfig
from .analysis import (
    run_covariance, run_simulate, run_limits, run_spectrum, run_su2,
    run_blockgate
)
from .verification import run_verify
