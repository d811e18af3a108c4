"""Functional regression on manifolds.

Recovers noisily sampled predictor curves, estimates the intrinsic manifold
dimension and tangent spaces, and fits a local linear regression on tangent
coordinates, with kernel and linear baselines and a seeded benchmark CLI.
"""

__version__ = "0.1.0"

from . import baselines, bench, datagen, errors, estimator, funcspace, intrinsic_dim, recovery, tangent  # noqa: F401
from .errors import FremError  # noqa: F401
from .estimator import FremModel, fit, fit_local, predict, select_bandwidths  # noqa: F401
from .funcspace import Grid, GridFunction, inner_product, kernel_eval, l2_distance  # noqa: F401
from .intrinsic_dim import DimEstimate, DimSettings, estimate_dim  # noqa: F401
from .recovery import DiscreteObservations, SmootherSettings, smooth_curve  # noqa: F401
from .tangent import TangentFrame, build_frame, local_covariance, neighborhood, project, tangent_basis  # noqa: F401
