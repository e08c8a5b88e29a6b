"""Nonparametric instrumental-variables regression.

Two estimators of a regression function identified through an
instrument: inversion of a ridge-regularized estimate of the associated
integral operator (kernel method), and a ridged orthogonal-series fit
on rank-transformed marginals.  A replicated simulation harness with a
built-in design measures bias, variance and convergence rates.
"""

from .dgp import (
    DgpSpec,
    joint_density,
    marginal_density,
    mean_outcome_given_instrument,
    operator_eigenvalues,
    sample_dataset,
    true_regression,
)
from .errors import (
    DomainError,
    InputDataError,
    NpivError,
    NumericalInvariantError,
    ParameterError,
)
from .kernel_iv import (
    DEFAULT_EVAL_POINTS,
    Estimate,
    KernelIvConfig,
    estimate_bivariate,
    estimate_multivariate,
    estimation_band,
)
from .kernels import (
    BaseKernel,
    BoundaryPolicy,
    GeneralizedKernel,
    KernelFamily,
    scaled_moments,
)
from .montecarlo import (
    McConfig,
    McReport,
    RateStudyResult,
    default_cells,
    rate_study,
    run_monte_carlo,
)
from .operator import (
    Dataset,
    DiscretizedOperator,
    QuadratureGrid,
    build_grid,
    discretize_from_density,
    discretize_operator,
    fit_decay_exponent,
    kde_joint,
    kde_loo,
    ridge_solve,
    spectrum,
)
from .series_iv import (
    SeriesFit,
    SeriesIvConfig,
    cosine_basis,
    cross_moment_matrix,
    ecdf_transform,
    response_moment_vector,
    series_estimate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
