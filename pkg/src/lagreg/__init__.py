"""Laguerre-series hard-thresholding estimation of ``h = f**2`` in the model
``y = f(t) * eps + sigma * z``, with i.i.d. or long-memory Gaussian errors."""

__version__ = "0.1.0"

from .basis import (
    BasisGrid,
    LaguerreCoeffs,
    basis_integral,
    laguerre_fn,
    laguerre_fn_row,
    make_grid,
    project,
    reconstruct,
)
from .estimator import (
    EstimatorConfig,
    Regime,
    ThresholdedEstimate,
    estimate_coeff_iid,
    estimate_coeff_lm,
    fit,
    ise,
    threshold,
    truncation_level,
)
from .experiments import StudyPlan, fit_loglog_slope, run_risk_study, run_variance_study
from .model import DesignDensity, ModelSpec, RegressionSample, simulate, sobolev_tail_check
from .noise import NoiseKind, NoiseSpec, covariance_eigen_range, fgn_autocov, gen_iid, gen_lm
