"""Objective Eulerian coherent structures of planar velocity fields.

Elliptic, hyperbolic and parabolic structures are extracted from a single
snapshot of the rate-of-strain tensor and checked against short-time
particle advection.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, OecsError
from .flows import FLOW_NAMES, analytic_flow
from .grid_field import AnalyticField, GridAxis, GriddedField, sample_velocity, velocity_gradient

__all__ = [
    "AnalyticField",
    "ConfigError",
    "DataError",
    "FLOW_NAMES",
    "GridAxis",
    "GriddedField",
    "OecsError",
    "analytic_flow",
    "sample_velocity",
    "velocity_gradient",
]
