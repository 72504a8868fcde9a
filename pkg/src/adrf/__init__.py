"""Dose-response estimation for functional treatments.

A treatment that is an entire curve has no density, so the usual
generalized propensity score does not exist.  This package estimates the
average dose-response functional E{Y*(z)} = a + <b, z> from observational
data by three routes: nonparametric stabilized balancing weights, a
partially linear outcome regression, and their doubly robust combination.
"""

from .dataset import Dataset
from .errors import AdrfError
from .estimators import (
    AdrfFit,
    adrf_eval,
    ate,
    fit_dr,
    fit_fsw,
    fit_naive,
    fit_or,
    truncated_flr,
)
from .fda import (
    FpcaModel,
    FunctionalSample,
    Grid,
    fpca,
    inner_product,
    mean_function,
    pc_scores,
)
from .io import DatasetFiles, load_dataset, read_fit, write_dataset, write_fit
from .simlab import BenchmarkReport, SimModel, generate, ise, run_benchmark
from .sieve import SieveDesign, Standardizer, sieve_design, standardize
from .tuning import (
    CvConfig,
    cv_loss_dr,
    cv_loss_fsw,
    cv_loss_or,
    default_config,
    make_folds,
    select_tuning,
)
from .weights import (
    RhoFamily,
    WeightFit,
    estimate_weights,
    fit_local_weight,
    pairwise_distances,
    rho_family,
)

__all__ = [
    "AdrfError",
    "AdrfFit",
    "BenchmarkReport",
    "CvConfig",
    "Dataset",
    "DatasetFiles",
    "FpcaModel",
    "FunctionalSample",
    "Grid",
    "RhoFamily",
    "SieveDesign",
    "SimModel",
    "Standardizer",
    "WeightFit",
    "adrf_eval",
    "ate",
    "cv_loss_dr",
    "cv_loss_fsw",
    "cv_loss_or",
    "default_config",
    "estimate_weights",
    "fit_dr",
    "fit_fsw",
    "fit_local_weight",
    "fit_naive",
    "fit_or",
    "fpca",
    "generate",
    "inner_product",
    "ise",
    "load_dataset",
    "make_folds",
    "mean_function",
    "pairwise_distances",
    "pc_scores",
    "read_fit",
    "rho_family",
    "run_benchmark",
    "select_tuning",
    "sieve_design",
    "standardize",
    "truncated_flr",
    "write_dataset",
    "write_fit",
]

__version__ = "0.1.0"
