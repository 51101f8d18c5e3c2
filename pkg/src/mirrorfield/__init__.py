"""Moving-mirror radiation in 1+1 dimensional conformal field theory."""

__version__ = "0.1.0"

from .errors import DomainError, KinkError, MirrorfieldError, MonotonicityError, NonConvergenceError
from .trajectory import (InertialTrajectory, PulseTrajectory, TableTrajectory, ThermalTrajectory,
                         load_trajectory, make_trajectory)
from .stress_tensor import FluxProfile, flux, flux_delta, flux_profile, total_energy

__all__ = [
    "DomainError", "KinkError", "MirrorfieldError", "MonotonicityError", "NonConvergenceError",
    "InertialTrajectory", "PulseTrajectory", "TableTrajectory", "ThermalTrajectory",
    "load_trajectory", "make_trajectory",
    "FluxProfile", "flux", "flux_delta", "flux_profile", "total_energy",
]
