"""Procedural face-milled surfaces built from overlapping ring marks."""
from .config import MillConfig
from .render import Grid, MillResult, adapt_height, evaluate_field, relevant_ring_count, ring_index, simulate
from .ring import (RingArrays, RingParams, noise_value, ring_value, sample_rings, shape_value,
                   support_mask, tilt_value, weight_value)
from .toolpath import (ToolPath, Viewport, parallel_centers, spiral_angles, spiral_arc_length,
                       spiral_arc_length_deriv, spiral_centers, spiral_point, tool_path)

__all__ = [
    "MillConfig", "Grid", "MillResult", "adapt_height", "evaluate_field", "relevant_ring_count",
    "ring_index", "simulate", "RingArrays", "RingParams", "noise_value", "ring_value", "sample_rings",
    "shape_value", "support_mask", "tilt_value", "weight_value", "ToolPath", "Viewport",
    "parallel_centers", "spiral_angles", "spiral_arc_length", "spiral_arc_length_deriv",
    "spiral_centers", "spiral_point", "tool_path",
]
