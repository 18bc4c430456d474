"""Sparse multi-group quadratic discriminant analysis via projection.

Estimates group-specific discriminant directions by penalized convex
optimization and classifies with a projected quadratic rule that tolerates
rank-deficient projected covariances.
"""

from .exceptions import (
    ConstructionError,
    DegenerateDiagonalWarning,
    InsufficientGroupSize,
    InvalidInput,
    MgqdaError,
    NotPSD,
)
from .linalg import (
    EigenDecomposition,
    pseudo_det,
    pseudo_inverse,
    psd_factor,
    sym_eigen,
)
from .stats import Dataset, GroupStats, compute_gamma, compute_group_stats, gram_products
from .solver import (
    Coefficients,
    PenaltySpec,
    SolveReport,
    block_gradient_v,
    block_update,
    compute_kkt_residual,
    extract_support,
    fit,
    fit_path,
    lambda_max,
    lambda_path,
    objective,
)
from .classifier import (
    FittedModel,
    basis_invariance_check,
    build_model,
    load_model,
    predict,
    save_model,
    score,
    score_matrix,
)
from .simgen import (
    BlockAutocorrelation,
    BlockEquicorrelation,
    BlockModel,
    Metrics,
    ModelDefinition,
    SimulationSpec,
    Spiked,
    evaluate,
    make_covariance,
    model_spec,
    run_benchmark,
    sample,
)
from .tuning import CvConfig, CvResult, cross_validate

__version__ = "0.1.0"
