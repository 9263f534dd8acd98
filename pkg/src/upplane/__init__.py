"""Uncertainty-perception tradeoff toolkit: closed-form bounds, a Gaussian
verification lab, high-dimensional estimators and an image evaluation pipeline."""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    DivergenceKind,
    PlaneContext,
    Region,
    RegionVerdict,
    UpPoint,
    classify_point,
    eta,
    eta_hellinger,
    gamma_opt,
    up_region_bounds,
)
from .errors import UpPlaneError  # noqa: E402
from .estimators import KdeConfig, KnnConfig, hellinger_distance, kde_renyi_half, knn_entropy  # noqa: E402
from .gaussianlab import LinearGaussianProblem, build_problem, solve_up_gaussian  # noqa: E402
from .numstats import GaussianModel, SpdMatrix, entropy_power, gaussian_entropy  # noqa: E402

__all__ = [
    "DivergenceKind", "PlaneContext", "Region", "RegionVerdict", "UpPoint", "classify_point",
    "eta", "eta_hellinger", "gamma_opt", "up_region_bounds", "UpPlaneError", "KdeConfig",
    "KnnConfig", "hellinger_distance", "kde_renyi_half", "knn_entropy", "LinearGaussianProblem",
    "build_problem", "solve_up_gaussian", "GaussianModel", "SpdMatrix", "entropy_power",
    "gaussian_entropy",
]
