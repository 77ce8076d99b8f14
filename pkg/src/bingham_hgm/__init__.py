"""
Holonomic gradient method for the Bingham distribution.

Evaluates the normalising constant ``C(theta)`` of the density proportional
to ``exp(sum_i theta_i x_i^2)`` on the unit sphere, its derivatives, and
maximum likelihood estimates, with saddle-point, complex closed-form, Monte
Carlo and contour-integral cross-checks.
"""

__version__ = "0.1.0"

from .approx import complex_bingham_const, saddle_t, spa1
from .exceptions import BinghamError, InputError, NumericalError, SingularPointError
from .hg import NormConstResult, OdeControl, PathSegment, Trajectory, hg_norm_const, propagate, propagate_log
from .mle import FitResult, SuffStats, fit_continuous, fit_discrete, loglik_grad_hess, sufficient_stats
from .model import GVector, Layout, MultiplicityTheta, canonicalize, uniform_mass
from .oracles import contour_norm_const, mc_norm_const
from .pfaffian import pfaffian_matrix, reduced_pfaffian_matrix
from .series import series_grad, series_norm_const

__all__ = [
    "BinghamError", "InputError", "NumericalError", "SingularPointError",
    "Layout", "MultiplicityTheta", "GVector", "canonicalize", "uniform_mass",
    "series_norm_const", "series_grad",
    "pfaffian_matrix", "reduced_pfaffian_matrix",
    "OdeControl", "PathSegment", "Trajectory", "NormConstResult",
    "propagate", "propagate_log", "hg_norm_const",
    "SuffStats", "FitResult", "sufficient_stats", "loglik_grad_hess",
    "fit_discrete", "fit_continuous",
    "saddle_t", "spa1", "complex_bingham_const",
    "mc_norm_const", "contour_norm_const",
]
