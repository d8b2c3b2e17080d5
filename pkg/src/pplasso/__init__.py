"""pplasso: regularized intensity estimation for spatial point processes.

Fits log-linear intensity models (inhomogeneous Poisson) and Papangelou
conditional-intensity models (Strauss) by maximizing a Berman-Turner
discretized (pseudo-)likelihood with L1 / adaptive-lasso penalties over a
regularization path, selecting the tuning parameter by composite BIC or
composite ERIC. Ships exact-identity Monte-Carlo checkers (Campbell, GNZ),
simulators, and a replicated simulation-study harness.
"""

from .errors import (
    DivergedError,
    EmptyErosionError,
    MissingPatternError,
    NoConvergedPointError,
    NonFiniteError,
    NoPenalizedCoefficientsError,
    OutOfExtentError,
    OutOfWindowError,
    PPLassoError,
    SingularActiveHessianError,
    SingularDesignError,
    UnstableModelError,
    WeightSumError,
    ZeroTauError,
)
from .geometry import PointPattern, Window, read_points_csv, write_points_csv
from .model import (
    ConstantField,
    CoordinateField,
    CovariateField,
    InteractionSpec,
    ModelSpec,
    ProductField,
    RasterField,
    read_raster_csv,
    write_raster_csv,
)
from .pipeline import FitOutcome, fit_document, run_fit
from .quadrature import (
    QuadratureScheme,
    approx_loglik,
    build_scheme,
    gradient_and_hessian,
    write_scheme_csv,
)
from .selection import (
    CriterionTable,
    Selection,
    cbic,
    ceric,
    criterion_table,
    effective_dof,
    select,
)
from .simulate import (
    CheckResult,
    SimConfig,
    campbell_check,
    gnz_check,
    replicate_rng,
    sample_poisson,
    sample_strauss,
)
from .solver import (
    PathFit,
    PenaltyPlan,
    fit_path,
    fit_unpenalized,
    kkt_residual,
    make_penalty_plan,
    soft_threshold,
    tau_max,
)
from .study import (
    StudyConfig,
    StudyReport,
    load_study_config,
    run_study,
    sinusoid_field,
    write_study_report,
)

__version__ = "0.1.0"

__all__ = [
    "PPLassoError", "EmptyErosionError", "OutOfWindowError",
    "OutOfExtentError", "MissingPatternError", "SingularDesignError",
    "DivergedError", "NonFiniteError", "NoPenalizedCoefficientsError",
    "ZeroTauError", "NoConvergedPointError", "UnstableModelError",
    "SingularActiveHessianError", "WeightSumError",
    "Window", "PointPattern", "read_points_csv", "write_points_csv",
    "CovariateField", "ConstantField", "CoordinateField", "RasterField",
    "ProductField", "InteractionSpec", "ModelSpec", "read_raster_csv",
    "write_raster_csv",
    "QuadratureScheme", "build_scheme", "approx_loglik",
    "gradient_and_hessian", "write_scheme_csv",
    "PenaltyPlan", "PathFit", "soft_threshold", "fit_unpenalized",
    "make_penalty_plan", "tau_max", "fit_path", "kkt_residual",
    "CriterionTable", "Selection", "cbic", "ceric", "criterion_table",
    "effective_dof", "select",
    "SimConfig", "CheckResult", "sample_poisson", "sample_strauss",
    "campbell_check", "gnz_check", "replicate_rng",
    "FitOutcome", "run_fit", "fit_document",
    "StudyConfig", "StudyReport", "load_study_config", "run_study",
    "write_study_report", "sinusoid_field",
    "__version__",
]
