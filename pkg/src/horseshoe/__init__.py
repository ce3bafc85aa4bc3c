"""Rigorous verification of stretching, covering and horseshoe dynamics on rectangles."""

__version__ = "0.1.0"

from .errors import HorseshoeError, Status
from .interval import Box, Interval
from .geometry import OrientedRect, Tube, check_crossing, is_horizontal_slab, is_vertical_slab
from .dynsys import AffineHorseshoe, ExpressionMap, TrigExample, eval_box, eval_point
from .miranda import check_miranda, find_fixed_points, find_zeros, track_zero_branch
from .covering import (
    check_boundary_stretching,
    check_face_covering,
    check_phase_covering,
    falsify_by_sampling,
)
from .symbolic import SymbolWord, chaos_report, find_periodic_orbit, seq_distance, shift, verify_itinerary

__all__ = [
    "__version__",
    "HorseshoeError",
    "Status",
    "Box",
    "Interval",
    "OrientedRect",
    "Tube",
    "check_crossing",
    "is_horizontal_slab",
    "is_vertical_slab",
    "AffineHorseshoe",
    "ExpressionMap",
    "TrigExample",
    "eval_box",
    "eval_point",
    "check_miranda",
    "find_fixed_points",
    "find_zeros",
    "track_zero_branch",
    "check_boundary_stretching",
    "check_face_covering",
    "check_phase_covering",
    "falsify_by_sampling",
    "SymbolWord",
    "chaos_report",
    "find_periodic_orbit",
    "seq_distance",
    "shift",
    "verify_itinerary",
]
