"""Grid evaluation of ring scenes.

The image is split into tiles; for each tile a bounding test selects the
rings whose support annulus reaches it, and a compiled kernel evaluates the
interaction of those rings pixel by pixel in temporal order. Every pixel sees
the same arithmetic regardless of the tiling or thread count, so results
are bit-identical across both.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..heightfield import HeightField, stats
from ..rng import as_stream
from .config import MillConfig
from .ring import INTERACTION_CODES, SHAPE_CODES, RingArrays, RingParams, sample_rings
from .toolpath import ToolPath, Viewport, tool_path

DEFAULT_TILE = 64
# slack for the tile/annulus test so rounding can only add candidates, never drop them
_INDEX_SLACK_MM = 1e-9


@dataclass(frozen=True)
class Grid:
    """Pixel grid: ``width x height`` pixels of ``spacing_um``, image corner at ``(x0_mm, y0_mm)``."""

    width: int
    height: int
    spacing_um: float
    x0_mm: float = 0.0
    y0_mm: float = 0.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or not self.spacing_um > 0:
            raise ValueError("grid needs positive size and spacing")

    @property
    def spacing_mm(self) -> float:
        return self.spacing_um / 1000.0

    @property
    def xs(self) -> np.ndarray:
        return self.x0_mm + (np.arange(self.width) + 0.5) * self.spacing_mm

    @property
    def ys(self) -> np.ndarray:
        return self.y0_mm + (np.arange(self.height) + 0.5) * self.spacing_mm

    @property
    def viewport(self) -> Viewport:
        return Viewport(self.x0_mm, self.y0_mm,
                        self.x0_mm + self.width * self.spacing_mm,
                        self.y0_mm + self.height * self.spacing_mm)


def ring_index(rings: RingArrays, shape: str, tile) -> np.ndarray:
    """Indices (ascending) of rings whose support annulus meets the rectangle ``tile = (x0, y0, x1, y1)``."""
    if len(rings) == 0:
        return np.zeros(0, dtype=np.int64)
    x0, y0, x1, y1 = tile
    cx, cy = rings.scalars[:, 0], rings.scalars[:, 1]
    inner, outer = rings.radii(shape)
    near = np.hypot(cx - np.clip(cx, x0, x1), cy - np.clip(cy, y0, y1))
    far = np.hypot(np.maximum(np.abs(cx - x0), np.abs(cx - x1)),
                   np.maximum(np.abs(cy - y0), np.abs(cy - y1)))
    hit = rings.active & (near <= outer + _INDEX_SLACK_MM) & (far >= inner - _INDEX_SLACK_MM)
    return np.nonzero(hit)[0].astype(np.int64)


@njit(nogil=True, cache=True)
def _render_tile(xs, ys, sc, radius, start, tau, shift, cand, shape, interaction, out):
    half_pi = 0.5 * math.pi
    for iy in range(ys.shape[0]):
        y = ys[iy]
        for ix in range(xs.shape[0]):
            x = xs[ix]
            f = 0.0
            for q in range(cand.shape[0]):
                k = cand[q]
                dx = x - sc[k, 0]
                dy = y - sc[k, 1]
                dist = math.hypot(dx, dy)
                wm = sc[k, 4]
                wi = sc[k, 5]
                wo = sc[k, 6]
                band = -1  # 0 inner, 1 indentation, 2 outer
                if dist >= radius - wm and dist <= radius:
                    band = 1
                elif dist >= radius - wm - wi and dist < radius - wm:
                    band = 0
                elif dist > radius and dist <= radius + wo:
                    band = 2
                if band < 0:
                    continue
                if shape != 2 and band != 1:
                    continue
                if band == 1:
                    if shape == 0:
                        s = -1.0
                    else:
                        s = -math.cos(half_pi * ((dist - radius + wm / 2.0) * 2.0 / wm))
                    lo = sc[k, 7]
                    hi = sc[k, 8]
                elif band == 0:
                    s = math.cos(half_pi * ((dist - (radius - wm - wi / 2.0)) * 2.0 / wi))
                    lo = sc[k, 9]
                    hi = sc[k, 10]
                else:
                    s = math.cos(half_pi * ((dist - (radius + wo / 2.0)) * 2.0 / wo))
                    lo = sc[k, 11]
                    hi = sc[k, 12]
                along = sc[k, 2] * dx + sc[k, 3] * dy
                t = (hi - lo) / (2.0 * radius) * along + 0.5 * (hi + lo)
                value = s * t
                n0 = start[k]
                n1 = start[k + 1]
                if n1 > n0:
                    angle = math.atan2(dy, dx)
                    acc = 0.0
                    for j in range(n0, n1):
                        acc += math.sin(tau[j] * angle + shift[j])
                    value += acc / (n1 - n0)
                if interaction == 0:
                    if value < f:
                        f = value
                elif interaction == 1:
                    f = value
                else:
                    a = sc[k, 13]
                    b = sc[k, 14]
                    w = (b - a) / (2.0 * radius) * along + 0.5 * (b + a)
                    if w < 0.0:
                        w = 0.0
                    elif w > 1.0:
                        w = 1.0
                    f = w * value + (1.0 - w) * f
            out[iy, ix] = f


def _as_arrays(rings) -> RingArrays:
    if isinstance(rings, RingArrays):
        return rings
    return RingArrays.pack(list(rings))


def evaluate_field(rings, shape: str, interaction: str, grid: Grid, *,
                   threads: int = 1, tile: int = DEFAULT_TILE) -> HeightField:
    """Render the interaction of ``rings`` (temporal order) on ``grid``."""
    if shape not in SHAPE_CODES or interaction not in INTERACTION_CODES:
        raise ValueError(f"unknown shape/interaction {shape!r}/{interaction!r}")
    if tile < 1:
        raise ValueError("tile size must be >= 1")
    arr = _as_arrays(rings)
    xs, ys = grid.xs, grid.ys
    out = np.zeros((grid.height, grid.width))
    shape_code, inter_code = SHAPE_CODES[shape], INTERACTION_CODES[interaction]

    def work(block):
        r0, r1, c0, c1 = block
        cand = ring_index(arr, shape, (xs[c0], ys[r0], xs[c1 - 1], ys[r1 - 1]))
        if cand.size:
            _render_tile(xs[c0:c1], ys[r0:r1], arr.scalars, arr.radius, arr.start, arr.tau, arr.shift,
                         cand, shape_code, inter_code, out[r0:r1, c0:c1])

    blocks = [(r0, min(r0 + tile, grid.height), c0, min(c0 + tile, grid.width))
              for r0 in range(0, grid.height, tile) for c0 in range(0, grid.width, tile)]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, blocks))
    else:
        for block in blocks:
            work(block)
    return HeightField(out, grid.spacing_um)


def relevant_ring_count(rings, shape: str, grid: Grid) -> int:
    """Number of rings whose support reaches any pixel centre of ``grid``."""
    arr = _as_arrays(rings)
    xs, ys = grid.xs, grid.ys
    return int(ring_index(arr, shape, (xs[0], ys[0], xs[-1], ys[-1])).size)


def adapt_height(field: HeightField, target_mean: float, target_variance: float) -> HeightField:
    """Affine map giving ``field`` the target mean and (biased) variance."""
    if target_variance < 0:
        raise ValueError("target variance must be >= 0")
    st = stats(field)
    if st.variance <= 0:
        raise ValueError("cannot adapt a constant field (zero variance)")
    x = field.data
    centred = x - x.mean()
    scaled = centred * math.sqrt(target_variance / np.mean(centred ** 2))
    return field.with_data(scaled - scaled.mean() + target_mean)


@dataclass(frozen=True, eq=False)
class MillResult:
    field: HeightField
    rings: list[RingParams]
    path: ToolPath
    relevant_rings: int
    seconds: float


def simulate(cfg: MillConfig, grid: Grid, rng, *, threads: int = 1, tile: int = DEFAULT_TILE) -> MillResult:
    """Tool-path, ring sampling and rendering in one call (heights in model units)."""
    rng = as_stream(rng)
    t0 = time.perf_counter()
    path = tool_path(cfg, grid.viewport)
    rings = sample_rings(path, cfg, rng)
    arr = RingArrays.pack(rings)
    field = evaluate_field(arr, cfg.shape, cfg.interaction, grid, threads=threads, tile=tile)
    seconds = time.perf_counter() - t0
    return MillResult(field, rings, path, relevant_ring_count(arr, cfg.shape, grid), seconds)
