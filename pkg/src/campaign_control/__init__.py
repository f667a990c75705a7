"""Exact simulation, search and MILP tooling for controlled opinion dynamics."""

from .dynamics import BC, DG, Instance, InstanceError, Trajectory, simulate
from .numeric import Rational

__version__ = "0.1.0"

__all__ = ["BC", "DG", "Instance", "InstanceError", "Rational", "Trajectory", "simulate", "__version__"]
