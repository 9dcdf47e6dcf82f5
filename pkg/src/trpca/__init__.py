"""Toroidal ridge PCA: principal curves of bivariate angular data.

The first principal curve is the density ridge of a fitted bivariate sine
von Mises or wrapped Cauchy model. Observations are projected onto that
ridge to obtain periodic scores.
"""

from .curve import FourierRidge, TabulatedRidge, arclength_param, eval_curve, eval_scaled
from .curve import fourier_fit, project
from .errors import TrpcaError
from .fitting import FitResult, LrtResult, fit_mle, lrt, moment_start
from .geometry import TorusPoint, cmod, frechet_summary, torus_dist
from .models import BsvmParams, BwcParams, BwnParams, density, log_density, sample
from .pipeline import PipelineConfig, Scores, TrpcaFit, apca, compute_scores, pve, ridge_pca
from .ridge import connected_component, explicit_edge_ridge, ridge_euler, ridge_implicit

__version__ = "0.1.0"

__all__ = [
    "FourierRidge", "TabulatedRidge", "arclength_param", "eval_curve", "eval_scaled",
    "fourier_fit", "project", "TrpcaError", "FitResult", "LrtResult", "fit_mle", "lrt",
    "moment_start", "TorusPoint", "cmod", "frechet_summary", "torus_dist", "BsvmParams",
    "BwcParams", "BwnParams", "density", "log_density", "sample", "PipelineConfig", "Scores",
    "TrpcaFit", "apca", "compute_scores", "pve", "ridge_pca", "connected_component",
    "explicit_edge_ridge", "ridge_euler", "ridge_implicit",
]
