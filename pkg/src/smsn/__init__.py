"""Maximal-skewness projections for scale mixtures of skew-normal vectors."""

from .mixing import (
    Degenerate,
    InvPowUniform,
    InvSqrtChiSq,
    MixingDistribution,
    SkewCoefficients,
    SqrtGamma,
    check_moment_condition,
    coefficients,
    moment,
    sample_mixing,
)
from .model import (
    DerivedParams,
    ProjectionParams,
    SmsnParams,
    density_smsn,
    density_sn,
    density_st,
    derive,
    params_from_dict,
    params_to_dict,
    projection_params,
    sample,
)
from .numerics import RngStream, toeplitz_corr
from .simulation import SimulationConfig, SimulationReport, run_experiment
from .skewness import (
    MaxSkewResult,
    analytic_max_direction,
    analytic_max_skewness,
    estimate_max_direction,
    gamma1_population,
    gamma1_univariate,
    h_objective,
    third_moment_matrix,
)

__version__ = "0.1.0"
