"""Local polynomial regression for functional covariates.

Library plus CLI: estimate a smooth functional of curve-valued data at a
fixed site, simulate Gaussian functional covariates, decompose the estimation
error exactly for oracle targets, and run seeded Monte Carlo rate studies.
"""

__version__ = "0.1.0"

from .basis import (
    TRIG,
    Basis,
    FunctionVec,
    analyze_grid,
    inner_product,
    norm_sq,
    project_head,
    subtract,
    synthesize,
)
from .estimator import (
    EstimateResult,
    EstimatorConfig,
    LocalDesign,
    assemble,
    estimate_at,
    neighborhood_mask,
    solve,
)
from .experiments import (
    ConditionCheck,
    RateStudyResult,
    StudyConfig,
    TuningRule,
    check_conditions,
    fit_rate,
    run_rate_study,
    tune,
)
from .multiindex import MultiIndexSet, enumerate_indices, monomial, monomial_row, multinomial
from .simulate import (
    CosLinear,
    ExpLinear,
    GaussianCovariateModel,
    NoiseModel,
    PolyCoord,
    Quadratic,
    respond,
    sample_covariates,
)
