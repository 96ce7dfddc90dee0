"""Topologically safe snapping of plane straight-line drawings to the integer grid."""

from .core import (Drawing, GridBox, Instance, Objective, ObjectiveKind, Solution, SolveStats, cost,
                   nearest_rounding)
from .geometry import classify_segments, compare_ccw, enumerate_directions, rotation_system
from .model import Model, build_full_model
from .solve import SolveConfig, SolveResult, Status, brute_force, snap_full, snap_lazy, solve_exact
from .topology import Violation, check

__version__ = "0.1.0"
