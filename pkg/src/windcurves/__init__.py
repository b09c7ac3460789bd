"""Multi-input offshore wind power curve estimation.

Design quasi-random experiments over seven environmental variables,
generate or ingest turbine power data, fit Gaussian-process surrogates
and classical baselines to the mean and standard deviation of generator
power, and quantify variable importance and prediction accuracy.
"""

from . import atmosphere, baselines, cli, design, evaluation, gp, oracle
from .atmosphere import (
    AtmosphereConstants,
    air_density,
    align_buoy_series,
    iec_corrected_speed,
    saturation_pressure,
    yaw_proxy,
)
from .baselines import (
    BinnedCurve,
    FracPolyCoeffs,
    fit_binning,
    fit_fracpoly,
    fracpoly_eval,
    predict_binning,
)
from .data import (
    Dataset,
    EnvSample,
    IEA_15MW,
    PowerRecord,
    TurbineSpec,
    load_dataset,
    save_dataset,
    select_inputs,
)
from .design import VariableRanges, design_dataset, scale_design, sobol_unit
from .errors import WindcurvesError
from .evaluation import (
    EvalReport,
    ModelRecipe,
    compare_models,
    kfold,
    mae,
    nrmse,
    rmse,
    significance_thresholds,
    total_energy,
    yaw_density_ratio,
)
from .gp import GPFitOptions, GPHyperparameters, GPModel, negative_log_likelihood, relevance
from .gp import fit as fit_gp
from .gp import predict as predict_gp
from .oracle import OracleConfig, mean_power, power_sd, simulate

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AtmosphereConstants", "air_density", "align_buoy_series", "iec_corrected_speed",
    "saturation_pressure", "yaw_proxy",
    "BinnedCurve", "FracPolyCoeffs", "fit_binning", "fit_fracpoly", "fracpoly_eval",
    "predict_binning",
    "Dataset", "EnvSample", "IEA_15MW", "PowerRecord", "TurbineSpec",
    "load_dataset", "save_dataset", "select_inputs",
    "VariableRanges", "design_dataset", "scale_design", "sobol_unit",
    "WindcurvesError",
    "EvalReport", "ModelRecipe", "compare_models", "kfold", "mae", "nrmse", "rmse",
    "significance_thresholds", "total_energy", "yaw_density_ratio",
    "GPFitOptions", "GPHyperparameters", "GPModel", "negative_log_likelihood",
    "relevance", "fit_gp", "predict_gp",
    "OracleConfig", "mean_power", "power_sd", "simulate",
    "atmosphere", "baselines", "cli", "design", "evaluation", "gp", "oracle",
]
