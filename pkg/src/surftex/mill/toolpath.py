"""Nominal ring centres along parallel and spiral tool-paths."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import MillConfig


@dataclass(frozen=True)
class Viewport:
    """Axis-aligned rectangle in mm."""

    x0: float
    y0: float
    x1: float
    y1: float

    def dilate(self, margin: float) -> "Viewport":
        return Viewport(self.x0 - margin, self.y0 - margin, self.x1 + margin, self.y1 + margin)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        return ((pts[:, 0] >= self.x0) & (pts[:, 0] <= self.x1)
                & (pts[:, 1] >= self.y0) & (pts[:, 1] <= self.y1))

    @property
    def corners(self) -> np.ndarray:
        return np.array([[self.x0, self.y0], [self.x1, self.y0], [self.x0, self.y1], [self.x1, self.y1]])


@dataclass(frozen=True, eq=False)
class ToolPath:
    """Nominal centres in milling order.

    ``passes[k]`` identifies the pass (line) a point belongs to; directions are
    taken between consecutive points of one pass.
    """

    centers: np.ndarray
    directions: np.ndarray
    passes: np.ndarray

    def __len__(self):
        return len(self.centers)


def path_directions(centers: np.ndarray, passes: np.ndarray, fallback: np.ndarray | None = None) -> np.ndarray:
    """Angle in (-pi, pi] of the step to the next point of the same pass.

    The last point of a pass reuses its predecessor's angle; a single-point
    pass takes ``fallback[pass]`` (0 if not given).
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    n = len(centers)
    theta = np.zeros(n)
    if n == 0:
        return theta
    step = np.diff(centers, axis=0)
    same = passes[1:] == passes[:-1]
    ang = np.arctan2(step[:, 1], step[:, 0])
    theta[:-1] = np.where(same, ang, np.nan)
    theta[-1] = np.nan
    for k in range(n):
        if np.isnan(theta[k]):
            if k > 0 and passes[k - 1] == passes[k]:
                theta[k] = theta[k - 1]
            elif fallback is not None:
                theta[k] = fallback[passes[k]]
            else:
                theta[k] = 0.0
    theta[theta <= -np.pi] = np.pi
    return theta


def _is_vertical(beta: float) -> bool:
    return abs(math.cos(beta)) < 1e-12


def parallel_point(i, j, cfg: MillConfig) -> np.ndarray:
    """Centre ``(i, j)``: point ``i`` on line ``j``."""
    rho, delta, beta = cfg.line_distance, cfg.delta_mm, cfg.beta_rad
    i, j = np.broadcast_arrays(np.asarray(i, dtype=float), np.asarray(j, dtype=float))
    if _is_vertical(beta):
        return np.stack([j * rho, i * delta], axis=-1)
    x = i * delta * math.cos(beta)
    return np.stack([x, math.tan(beta) * x + j * rho / math.cos(beta)], axis=-1)


def parallel_centers(cfg: MillConfig, viewport: Viewport) -> ToolPath:
    """All parallel-path centres within ``viewport`` dilated by the visibility margin.

    Lines are milled in ascending ``j``; along each line the ordering is
    increasing ``i`` (``same-up``), decreasing (``same-down``) or switching
    every line (``alternating``).
    """
    box = viewport.dilate(cfg.margin)
    rho, delta, beta = cfg.line_distance, cfg.delta_mm, cfg.beta_rad
    if _is_vertical(beta):
        # points (j*rho, i*delta): normal coordinate x, along coordinate y
        normal = box.corners[:, 0]
        along_of = lambda j: box.corners[:, 1]  # noqa: E731
    else:
        c, s = math.cos(beta), math.sin(beta)
        normal = -s * box.corners[:, 0] + c * box.corners[:, 1]
        along = c * box.corners[:, 0] + s * box.corners[:, 1]
        along_of = lambda j: along - j * rho * math.tan(beta)  # noqa: E731
    centers, passes, dirs = [], [], []
    j_lo, j_hi = math.floor(normal.min() / rho) - 1, math.ceil(normal.max() / rho) + 1
    line = 0
    for j in range(j_lo, j_hi + 1):
        t = along_of(j)
        i = np.arange(math.floor(t.min() / delta) - 1, math.ceil(t.max() / delta) + 2)
        pts = parallel_point(i, j, cfg)
        pts = pts[box.contains(pts)]
        if len(pts) == 0:
            continue
        reverse = cfg.ordering == "same-down" or (cfg.ordering == "alternating" and line % 2 == 1)
        if reverse:
            pts = pts[::-1]
        centers.append(pts)
        passes.append(np.full(len(pts), line))
        dirs.append(beta + (math.pi if reverse else 0.0))
        line += 1
    if not centers:
        return ToolPath(np.zeros((0, 2)), np.zeros(0), np.zeros(0, dtype=np.int64))
    centers = np.concatenate(centers)
    passes = np.concatenate(passes)
    fallback = np.angle(np.exp(1j * np.array(dirs)))
    return ToolPath(centers, path_directions(centers, passes, fallback), passes)


def spiral_arc_length(phi, a: float):
    """Arc length of the Archimedean spiral ``r = a*phi`` from 0 to ``phi``."""
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0):
        raise ValueError("spiral angle must be >= 0")
    root = np.sqrt(1.0 + phi * phi)
    return 0.5 * a * (phi * root + np.arcsinh(phi))


def spiral_arc_length_deriv(phi, a: float):
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0):
        raise ValueError("spiral angle must be >= 0")
    return a * np.sqrt(1.0 + phi * phi)


def spiral_point(phi, a: float, beta: float = 0.0, orientation: int = 1, origin=(0.0, 0.0)) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    x = orientation * a * phi * np.cos(phi + beta) + origin[0]
    y = a * phi * np.sin(phi + beta) + origin[1]
    return np.stack([x, y], axis=-1)


def spiral_angles(n: int, a: float, delta: float, steps: int = 1) -> np.ndarray:
    """Angles for ``n`` spiral centres with arc length ``k*delta``.

    Each angle starts from the previous one and takes ``steps`` Newton steps
    on ``L(phi) = k*delta``; one step is the cheap default.
    """
    phi = np.zeros(n)
    cur = 0.0
    for k in range(1, n):
        target = k * delta
        for _ in range(steps):
            root = math.sqrt(1.0 + cur * cur)
            length = 0.5 * a * (cur * root + math.asinh(cur))
            cur = cur - (length - target) / (a * root)
        phi[k] = cur
    return phi


def spiral_centers(cfg: MillConfig, viewport: Viewport) -> ToolPath:
    """Spiral-path centres visible in ``viewport``, ordered in milling direction."""
    a = cfg.line_distance / (2.0 * math.pi)
    origin = (cfg.origin_x_mm, cfg.origin_y_mm)
    box = viewport.dilate(cfg.margin)
    reach = float(np.max(np.hypot(box.corners[:, 0] - origin[0], box.corners[:, 1] - origin[1])))
    # arc length out to radius `reach`, with one extra turn of slack
    phi_max = reach / a + 2.0 * math.pi
    n = int(math.ceil(float(spiral_arc_length(phi_max, a)) / cfg.delta_mm)) + 2
    phi = spiral_angles(n, a, cfg.delta_mm, cfg.newton_steps)
    pts = spiral_point(phi, a, cfg.beta_rad, cfg.orientation, origin)
    if cfg.direction == "inward":
        pts = pts[::-1]
    passes = np.zeros(len(pts), dtype=np.int64)
    # directions from true spiral neighbours, before dropping invisible points
    theta = path_directions(pts, passes)
    keep = box.contains(pts)
    return ToolPath(pts[keep], theta[keep], passes[keep])


def tool_path(cfg: MillConfig, viewport: Viewport) -> ToolPath:
    if cfg.path == "spiral":
        return spiral_centers(cfg, viewport)
    return parallel_centers(cfg, viewport)
