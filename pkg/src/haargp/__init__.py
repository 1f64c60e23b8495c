"""Haar-random quantum neural network outputs as Gaussian processes.

Exact Weingarten moments, leading-order Gaussian-process moments, Monte Carlo
sampling, GP prediction and concentration bounds.
"""

__version__ = "0.1.0"

from .errors import HaarGPError
from .exact_weingarten import MomentSpec, exact_covariance, exact_moment, weingarten_matrix
from .gp_inference import GPModel, predictive, triviality_report
from .gp_moments import covariance_matrix, isserlis_moment
from .sampler import PauliObservable, PureState, make_dataset, sample_outputs

__all__ = [
    "GPModel",
    "HaarGPError",
    "MomentSpec",
    "PauliObservable",
    "PureState",
    "covariance_matrix",
    "exact_covariance",
    "exact_moment",
    "isserlis_moment",
    "make_dataset",
    "predictive",
    "sample_outputs",
    "triviality_report",
    "weingarten_matrix",
]
