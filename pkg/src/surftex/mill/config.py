"""Parameters of the milled-surface model.

Lateral lengths are in millimetres. Tilt scales, noise and the rendered
heights are in model units; the final render is mapped to micrometres by
:func:`surftex.mill.render.adapt_height`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

SHAPES = ("indicator", "cosine", "bump")
INTERACTIONS = ("min", "latest", "convex")
PATHS = ("parallel", "spiral")
ORDERINGS = ("same-up", "same-down", "alternating")
DIRECTIONS = ("outward", "inward")


@dataclass(frozen=True)
class MillConfig:
    """Face-milling model parameters (defaults are illustrative, not fitted)."""

    d_mm: float = 4.0
    alpha: float = 0.2
    delta_mm: float = 0.09
    shape: str = "bump"
    interaction: str = "min"

    # ring widths
    w_minus_mean: float = 0.25
    w_minus_std: float = 0.0
    w_inner_mean: float = 0.05
    w_inner_std: float = 0.0
    w_outer_mean: float = 0.1
    w_outer_std: float = 0.0

    # tilting: indentation means come from depth +- r*sin(angle)
    tilt_angle_rad: float = 0.05
    depth: float = 1.0
    l_minus_std: float = 0.0
    h_minus_std: float = 0.0
    l_inner_mean: float = 0.1
    l_inner_std: float = 0.0
    h_inner_mean: float = 0.1
    h_inner_std: float = 0.0
    l_outer_mean: float = 0.2
    l_outer_std: float = 0.0
    h_outer_mean: float = 0.2
    h_outer_std: float = 0.0

    # noise
    noise_lambda: float = 0.0
    noise_tau: float = 0.0

    # convex interaction weights
    a_min: float = 0.5
    a_max: float = 0.5
    b_min: float = 1.0
    b_max: float = 1.0

    # centre jitter covariance (mm^2)
    center_cov_xx: float = 0.0
    center_cov_xy: float = 0.0
    center_cov_yy: float = 0.0

    reorder_fraction: float = 0.0

    # tool-path
    path: str = "parallel"
    beta_rad: float = 0.0
    ordering: str = "same-up"
    origin_x_mm: float = 0.0
    origin_y_mm: float = 0.0
    orientation: int = 1
    direction: str = "outward"
    newton_steps: int = 1

    def __post_init__(self):
        r = self.radius
        if not self.d_mm > 0:
            raise ValueError("head diameter must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError(f"overlap alpha must lie in (0, 1), got {self.alpha}")
        if not self.delta_mm > 0:
            raise ValueError("center spacing delta must be positive")
        for name, allowed in (("shape", SHAPES), ("interaction", INTERACTIONS), ("path", PATHS),
                              ("ordering", ORDERINGS), ("direction", DIRECTIONS)):
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if not 0 < self.w_minus_mean < r:
            raise ValueError(f"w_minus_mean must lie in (0, d/2), got {self.w_minus_mean}")
        if not 0 <= self.w_inner_mean < r - self.w_minus_mean:
            raise ValueError("w_inner_mean must lie in [0, d/2 - w_minus_mean)")
        if self.w_outer_mean < 0:
            raise ValueError("w_outer_mean must be >= 0")
        for f in fields(self):
            if f.name.endswith("_std") and getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be >= 0")
        if self.noise_lambda < 0 or self.noise_tau < 0:
            raise ValueError("noise rates must be >= 0")
        if not (0 <= self.a_min <= self.a_max <= 1 and 0 <= self.b_min <= self.b_max <= 1):
            raise ValueError("convex weight bounds must satisfy 0 <= min <= max <= 1")
        if not 0 <= self.reorder_fraction <= 1:
            raise ValueError("reorder_fraction must lie in [0, 1]")
        if self.orientation not in (-1, 1):
            raise ValueError("orientation must be -1 or 1")
        if self.newton_steps < 1:
            raise ValueError("newton_steps must be >= 1")
        self.center_chol  # validates the covariance

    @property
    def radius(self) -> float:
        return self.d_mm / 2.0

    @property
    def line_distance(self) -> float:
        """Distance between neighbouring passes, ``(1 - alpha) * d``."""
        return (1.0 - self.alpha) * self.d_mm

    @property
    def l_minus_mean(self) -> float:
        return self.depth - self.radius * math.sin(self.tilt_angle_rad)

    @property
    def h_minus_mean(self) -> float:
        return self.depth + self.radius * math.sin(self.tilt_angle_rad)

    @property
    def w_outer_max(self) -> float:
        return self.w_outer_mean + 4.0 * self.w_outer_std

    @property
    def center_chol(self) -> np.ndarray:
        """Lower Cholesky factor of the centre covariance (PSD allowed)."""
        xx, xy, yy = self.center_cov_xx, self.center_cov_xy, self.center_cov_yy
        if xx < 0 or yy < 0 or xy * xy > xx * yy * (1 + 1e-12) + 1e-300:
            raise ValueError("center covariance must be positive semi-definite")
        l11 = math.sqrt(xx)
        l21 = xy / l11 if l11 > 0 else 0.0
        l22 = math.sqrt(max(yy - l21 * l21, 0.0))
        return np.array([[l11, 0.0], [l21, l22]])

    @property
    def margin(self) -> float:
        """How far outside the image a nominal centre can still leave a visible mark."""
        sigma_c = math.sqrt(max(self.center_cov_xx, self.center_cov_yy))
        return self.radius + self.w_outer_max + 3.0 * sigma_c

    @classmethod
    def from_width_of_cut(cls, a_e: float, **kw) -> "MillConfig":
        return cls(alpha=1.0 - a_e, **kw)
