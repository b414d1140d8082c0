"""Estimators, closed-form targets and distribution tests."""

from . import targets
from .accum import MomentAccumulator, mean_and_se
from .convergence import (
    StationaryLawReport,
    WeakConvergenceReport,
    stationary_law_check,
    uniform_sphere_speeds,
    weak_convergence_study,
)
from .correlations import autocov_psi, exp_decay_conditional, green_kubo_constants, v_correlations
from .estimate import CorrelationEstimate
from .ks import KsResult, ks_critical_coefficient, ks_two_sample
from .moments import IncrementEnsemble, MomentBoundFit, driver_increments, geometric_gaps, moment_scaling_fit
from .psi import StationaryDriverEnsemble, conditioning_frames, simulate_stationary_psi

__all__ = [
    "CorrelationEstimate",
    "IncrementEnsemble",
    "KsResult",
    "MomentAccumulator",
    "MomentBoundFit",
    "StationaryDriverEnsemble",
    "StationaryLawReport",
    "WeakConvergenceReport",
    "autocov_psi",
    "conditioning_frames",
    "driver_increments",
    "exp_decay_conditional",
    "geometric_gaps",
    "green_kubo_constants",
    "ks_critical_coefficient",
    "ks_two_sample",
    "mean_and_se",
    "moment_scaling_fit",
    "simulate_stationary_psi",
    "stationary_law_check",
    "targets",
    "uniform_sphere_speeds",
    "v_correlations",
    "weak_convergence_study",
]
