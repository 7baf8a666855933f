"""Pulsed resonance fluorescence cascaded into a second two-level system."""
from .liouvillian import EMITTERS, LiouvillianParts, SystemParams, build_cascaded, build_source_only
from .pulse import PulseParams, envelope, support_window
from .propagator import TimeGrid, Trajectory, emission_grid, evolve, integrate_intensity, map_grid

__version__ = "0.1.0"
