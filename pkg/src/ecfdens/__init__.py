"""Adaptive multivariate density estimation by Fourier inversion of the
thresholded empirical characteristic function, with an Euler-characteristic
scan for the threshold constant."""

__version__ = "0.1.0"

from .grids import (
    DEFAULT_NODE_BUDGET,
    FrequencyGrid,
    GridBudgetError,
    GridField,
    SampleSet,
    cf_evaluate,
    ecf_evaluate,
    make_grid,
)
from .threshold import (
    RULE_KINDS,
    RULE_LOG,
    RULE_SQRT_LOG,
    RULE_U_DEPENDENT,
    BinaryMask,
    ThresholdRule,
    apply_threshold,
    threshold_mask,
)
from .euler import KappaSelection, euler_characteristic, select_kappa
from .estimator import (
    DensityEstimate,
    IntegrationDomain,
    RiskResult,
    SpatialGrid,
    boundary_clearance,
    default_spatial_grid,
    dn_volume,
    dn_volume_asymptotic,
    invert_to_density,
    l2_risk_fourier,
    spatial_l2_error,
)
from .rates import RateInfo, SobolevSpec, is_in_class_A, sobolev_rate
from .targets import (
    TargetModel,
    beta22_model,
    bias_quadrature,
    example1_model,
    gamma_model,
    gaussian_model,
    linear_transform,
    make_model,
    mixture_model,
    model_names,
    product_model,
)
from .simulate import (
    CHAIN_KINDS,
    ChainConfig,
    RngStream,
    doukhan_chain,
    dyadic_ar_chain,
    sample_iid,
)
from .bench import (
    DeviationResult,
    ExperimentPlan,
    RateStudy,
    RiskReport,
    deviation_experiment,
    rate_study,
    run_experiment,
    suggest_grid,
)

__all__ = [name for name in dir() if not name.startswith("_")]
