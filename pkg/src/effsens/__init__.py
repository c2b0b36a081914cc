"""Efficient estimation of conditional-moment functionals and Sobol indices."""

from .api import SobolEstimator
from .density import DensityEstimate, Domain, fit_kde, infer_domain, split_sizes
from .errors import (
    AccuracyWarning,
    ArgumentError,
    ConfigurationError,
    DataError,
    EffsensError,
)
from .estimator import (
    EstimateReport,
    EstimatorConfig,
    FunctionalSpec,
    SobolBlock,
    c_plugin,
    estimate_T,
    h_term,
    k_kernel,
    sobol_first_order,
)
from .harness import (
    ExperimentConfig,
    ReplicationTable,
    benchmark_against_oracle,
    run_replication,
)
from .models import (
    BenchmarkModel,
    get_model,
    model1,
    model2,
    pick_freeze_oracle,
    sample_model,
    true_value_model1,
    true_value_model2,
)
from .orthobasis import (
    BasisIndexSet,
    Interval,
    LegendreBasis1D,
    build_index_set,
    evaluate_projection,
    legendre_eval,
    project_coefficients,
    tensor_eval,
)
from .quadfunc import (
    HoeffdingTerms,
    SymmetricKernel,
    ThetaEstimate,
    coefficient_vectors,
    estimate_theta,
    hoeffding_decompose,
    lambda_plugin,
)
from .quadrature import (
    QuadratureRule1D,
    QuadratureRule2D,
    QuadratureRule3D,
    adaptive_simpson,
    gauss_rule,
    gauss_rule_2d,
    gauss_rule_3d,
    integrate_2d,
    integrate_3d,
)

__version__ = "0.1.0"
