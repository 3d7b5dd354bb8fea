"""Patch stitching along minimal-error seams (image quilting).

Patches are square ``M_P x M_P`` arrays indexed ``[row, col]`` and inserted in
raster order. Overlap regions inside the incoming patch:

* ``"h"`` -- left strip, columns ``0..o-1`` (patch placed right of existing
  content); split by a *vertical* seam with one column per row.
* ``"v"`` -- top strip, rows ``0..o-1`` (patch placed below existing
  content); split by a *horizontal* seam with one row per column.
* ``"L"`` -- union of both strips.

Mask value 1 keeps the canvas, 0 takes the new patch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import ndimage

from .heightfield import HeightField
from .rng import as_stream

VERTICAL = "vertical"
HORIZONTAL = "horizontal"


@dataclass(frozen=True)
class StitchPlan:
    n: int
    patch_size: int
    overlap: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one patch per axis")
        if not 1 < self.overlap < self.patch_size:
            raise ValueError(f"overlap must satisfy 1 < o < patch size, got o={self.overlap}, "
                             f"patch size {self.patch_size}")

    @property
    def step(self) -> int:
        return self.patch_size - self.overlap

    @property
    def output_size(self) -> int:
        return self.step * self.n + self.overlap

    @classmethod
    def covering(cls, size: int, patch_size: int, overlap: int) -> "StitchPlan":
        """Smallest plan whose output is at least ``size`` pixels wide."""
        n = max(1, math.ceil((size - overlap) / (patch_size - overlap)))
        return cls(n, patch_size, overlap)


@dataclass(frozen=True, eq=False)
class SeamPath:
    """8-connected monotone path of ``(row, col)`` cells.

    Vertical paths hold one cell per row, top to bottom. Horizontal paths
    hold one cell per column, ordered right to left.
    """

    orientation: str
    cells: np.ndarray

    @classmethod
    def from_offsets(cls, orientation: str, offsets) -> "SeamPath":
        offsets = np.asarray(offsets, dtype=np.int64)
        sweep = np.arange(offsets.size)
        if orientation == VERTICAL:
            cells = np.column_stack([sweep, offsets])
        elif orientation == HORIZONTAL:
            cells = np.column_stack([offsets, sweep])[::-1]
        else:
            raise ValueError(f"unknown orientation {orientation!r}")
        return cls(orientation, np.ascontiguousarray(cells))

    @property
    def offsets(self) -> np.ndarray:
        """Free-axis coordinate indexed by sweep coordinate (row or column)."""
        if self.orientation == VERTICAL:
            return self.cells[:, 1]
        return self.cells[::-1, 0]

    def __len__(self):
        return len(self.cells)

    def is_connected(self) -> bool:
        steps = np.diff(self.cells, axis=0)
        sweep_axis = 0 if self.orientation == VERTICAL else 1
        expected = 1 if self.orientation == VERTICAL else -1
        return bool(np.all(steps[:, sweep_axis] == expected) and np.all(np.abs(steps[:, 1 - sweep_axis]) <= 1))

    def cost(self, surface: np.ndarray) -> float:
        return float(surface[self.cells[:, 0], self.cells[:, 1]].sum())


def error_surface(existing: np.ndarray, new: np.ndarray, region: str, overlap: int) -> np.ndarray:
    """Squared differences over an overlap region.

    ``"h"`` returns the ``M_P x o`` left strip, ``"v"`` the ``o x M_P`` top
    strip, ``"L"`` the full ``M_P x M_P`` grid with ``inf`` outside the L.
    """
    existing = np.asarray(existing, dtype=float)
    new = np.asarray(new, dtype=float)
    if existing.shape != new.shape or existing.ndim != 2 or existing.shape[0] != existing.shape[1]:
        raise ValueError(f"need two equal square patches, got {existing.shape} and {new.shape}")
    e = (existing - new) ** 2
    if region == "h":
        return e[:, :overlap].copy()
    if region == "v":
        return e[:overlap, :].copy()
    if region == "L":
        out = np.full_like(e, np.inf)
        out[:, :overlap] = e[:, :overlap]
        out[:overlap, :] = e[:overlap, :]
        return out
    raise ValueError(f"unknown overlap region {region!r}")


def _accumulate(surface: np.ndarray, first: np.ndarray) -> np.ndarray:
    """Row-by-row DP: ``acc[r, c] = surface[r, c] + min(acc[r-1, c-1:c+2])``."""
    rows, cols = surface.shape
    acc = np.empty_like(surface, dtype=float)
    acc[0] = first
    for r in range(1, rows):
        prev = acc[r - 1]
        best = prev.copy()
        best[1:] = np.minimum(best[1:], prev[:-1])
        best[:-1] = np.minimum(best[:-1], prev[1:])
        acc[r] = surface[r] + best
    return acc


def _backtrack(acc: np.ndarray, end_col: int) -> np.ndarray:
    """Walk back up an accumulated table, preferring the smallest column on ties."""
    rows, cols = acc.shape
    path = np.empty(rows, dtype=np.int64)
    path[-1] = end_col
    for r in range(rows - 2, -1, -1):
        c = path[r + 1]
        lo, hi = max(c - 1, 0), min(c + 2, cols)
        path[r] = lo + int(np.argmin(acc[r, lo:hi]))
    return path


def _vertical_seam(surface: np.ndarray) -> np.ndarray:
    acc = _accumulate(surface, surface[0])
    return _backtrack(acc, int(np.argmin(acc[-1])))


def min_seam(surface: np.ndarray, orientation: str) -> SeamPath:
    """Minimal-cost 8-connected seam through a straight overlap strip.

    ``orientation="vertical"`` expects a ``(M_P, o)`` strip, ``"horizontal"``
    an ``(o, M_P)`` strip.
    """
    surface = np.asarray(surface, dtype=float)
    if orientation == VERTICAL:
        if surface.shape[1] < 2:
            raise ValueError("overlap strip must be at least 2 pixels wide")
        return SeamPath.from_offsets(VERTICAL, _vertical_seam(surface))
    if orientation == HORIZONTAL:
        if surface.shape[0] < 2:
            raise ValueError("overlap strip must be at least 2 pixels wide")
        return SeamPath.from_offsets(HORIZONTAL, _vertical_seam(surface.T))
    raise ValueError(f"unknown orientation {orientation!r}")


class LSeam(NamedTuple):
    horizontal: SeamPath
    vertical: SeamPath
    crossing: tuple[int, int]
    cost: float


def min_seam_L(surface: np.ndarray, previous: SeamPath | None, overlap: int) -> LSeam:
    """Connected seam pair for an L-shaped overlap.

    ``previous`` is the horizontal seam of the left neighbour in that
    patch's own coordinates. Its last ``o`` cells fall on this patch's corner
    block and are kept; the seam is extended optimally across the remaining
    top-strip columns. The vertical seam starts on the kept part (so the two
    share a cell in the corner block) and runs down the left strip with
    minimal cost.

    ``cost`` is the error along the effective boundary of the new region: the
    horizontal seam right of the crossing plus the vertical seam below it,
    the crossing counted once.
    """
    if previous is None:
        raise ValueError("L-shaped stitching needs the previous horizontal seam")
    e = np.asarray(surface, dtype=float)
    size = e.shape[0]
    o = int(overlap)
    if e.shape != (size, size) or not 1 < o < size:
        raise ValueError(f"bad L surface {e.shape} for overlap {o}")
    if previous.orientation != HORIZONTAL or len(previous) != size:
        raise ValueError("previous seam must be a full horizontal seam of the same patch size")
    corner = previous.offsets[size - o:]
    if corner.min() < 0 or corner.max() >= o:
        raise ValueError("previous seam does not end inside this patch's corner block")

    # elongation over columns o..size-1 within the top strip
    strip = e[:o, o:].T
    start = np.full(o, np.inf)
    r_end = int(corner[-1])
    start[max(r_end - 1, 0):r_end + 2] = strip[0, max(r_end - 1, 0):r_end + 2]
    acc = _accumulate(strip, start)
    tail = _backtrack(acc, int(np.argmin(acc[-1])))
    h_rows = np.concatenate([corner, tail])

    # best vertical continuation from every left-strip cell down to the bottom
    left = e[:, :o]
    down = _accumulate(left[::-1], left[-1])[::-1]
    h_cost = e[h_rows, np.arange(size)]
    suffix = np.cumsum(h_cost[::-1])[::-1]
    cols = np.arange(o)
    totals = suffix[:o] + down[corner, cols] - h_cost[:o]
    c0 = int(np.argmin(totals))
    r0 = int(corner[c0])

    v_cols = np.full(size, c0, dtype=np.int64)
    for r in range(r0 + 1, size):
        c = v_cols[r - 1]
        lo, hi = max(c - 1, 0), min(c + 2, o)
        v_cols[r] = lo + int(np.argmin(down[r, lo:hi]))

    return LSeam(SeamPath.from_offsets(HORIZONTAL, h_rows),
                 SeamPath.from_offsets(VERTICAL, v_cols),
                 (r0, c0), float(totals[c0]))


def mask_from_path(size: int, alignment: str, horizontal: SeamPath | None = None,
                   vertical: SeamPath | None = None) -> np.ndarray:
    """Binary keep-mask for one patch.

    ``alignment`` is ``"first"`` (all zero), ``"h"`` (needs ``vertical``),
    ``"v"`` (needs ``horizontal``) or ``"L"`` (needs both).
    """
    rows = np.arange(size)[:, None]
    cols = np.arange(size)[None, :]
    if alignment == "first":
        return np.zeros((size, size), dtype=np.uint8)
    new = np.ones((size, size), dtype=bool)
    if alignment in ("h", "L"):
        if vertical is None:
            raise ValueError(f"alignment {alignment!r} needs a vertical seam")
        new &= cols >= vertical.offsets[:, None]
    if alignment in ("v", "L"):
        if horizontal is None:
            raise ValueError(f"alignment {alignment!r} needs a horizontal seam")
        new &= rows >= horizontal.offsets[None, :]
    if alignment not in ("h", "v", "L"):
        raise ValueError(f"unknown alignment {alignment!r}")
    return (~new).astype(np.uint8)


def seam_pixels(mask: np.ndarray) -> np.ndarray:
    """Pixels whose 3x3 neighbourhood (clipped to the mask) holds both values."""
    mask = np.asarray(mask)
    hi = ndimage.maximum_filter(mask, size=3, mode="nearest")
    lo = ndimage.minimum_filter(mask, size=3, mode="nearest")
    return hi != lo


def _insert(canvas: np.ndarray, patch: np.ndarray, x: int, y: int, mask: np.ndarray) -> None:
    size_y, size_x = patch.shape
    win = canvas[y:y + size_y, x:x + size_x]
    win[...] = np.where(mask.astype(bool), win, patch)
    seam = seam_pixels(mask)
    if not seam.any():
        return
    ya, xa = max(y - 1, 0), max(x - 1, 0)
    yb, xb = min(y + size_y + 1, canvas.shape[0]), min(x + size_x + 1, canvas.shape[1])
    region = canvas[ya:yb, xa:xb]
    kernel = np.ones((3, 3))
    sums = ndimage.correlate(region, kernel, mode="constant", cval=0.0)
    counts = ndimage.correlate(np.ones_like(region), kernel, mode="constant", cval=0.0)
    means = (sums / counts)[y - ya:y - ya + size_y, x - xa:x - xa + size_x]
    win[seam] = means[seam]


def insert_patch(canvas: np.ndarray, patch: np.ndarray, position: tuple[int, int],
                 mask: np.ndarray) -> np.ndarray:
    """Blend ``patch`` into a copy of ``canvas`` at ``position = (x, y)``.

    Mask-1 pixels keep the canvas, mask-0 pixels take the patch; every seam
    pixel is then replaced by its 3x3 mean (neighbourhood clipped at the
    canvas border).
    """
    canvas = np.array(canvas, dtype=float, copy=True)
    patch = np.asarray(patch, dtype=float)
    x, y = position
    if x < 0 or y < 0 or y + patch.shape[0] > canvas.shape[0] or x + patch.shape[1] > canvas.shape[1]:
        raise IndexError(f"patch at {position} does not fit into canvas {canvas.shape}")
    if np.shape(mask) != patch.shape:
        raise ValueError("mask and patch shapes differ")
    _insert(canvas, patch, x, y, np.asarray(mask))
    return canvas


PatchProvider = Callable[[int, int, object], HeightField]


def stitch_all(plan: StitchPlan, provider: PatchProvider, rng, *, record: dict | None = None) -> HeightField:
    """Assemble ``plan.n x plan.n`` generated patches in raster order.

    ``provider(i, j, stream)`` returns the patch for column ``i`` and row
    ``j``; ``stream`` is a sub-stream unique to that patch, so patches can be
    generated in any order. If ``record`` is given it receives the seams per
    patch under ``(i, j)``.
    """
    rng = as_stream(rng)
    size, o, step = plan.patch_size, plan.overlap, plan.step
    canvas = np.zeros((plan.output_size, plan.output_size))
    spacing = None
    horizontals: dict[tuple[int, int], SeamPath] = {}
    for j in range(plan.n):
        for i in range(plan.n):
            patch = provider(i, j, rng.substream(f"patch/{j}/{i}"))
            if patch.shape != (size, size):
                raise ValueError(f"provider returned {patch.shape}, expected {(size, size)}")
            if spacing is None:
                spacing = patch.spacing_um
            elif patch.spacing_um != spacing:
                raise ValueError("patches must share one pixel spacing")
            x, y = i * step, j * step
            existing = canvas[y:y + size, x:x + size]
            h_seam = v_seam = None
            if i == 0 and j == 0:
                mask = mask_from_path(size, "first")
            elif j == 0:
                v_seam = min_seam(error_surface(existing, patch.data, "h", o), VERTICAL)
                mask = mask_from_path(size, "h", vertical=v_seam)
            elif i == 0:
                h_seam = min_seam(error_surface(existing, patch.data, "v", o), HORIZONTAL)
                mask = mask_from_path(size, "v", horizontal=h_seam)
            else:
                seam = min_seam_L(error_surface(existing, patch.data, "L", o), horizontals[(i - 1, j)], o)
                h_seam, v_seam = seam.horizontal, seam.vertical
                mask = mask_from_path(size, "L", horizontal=h_seam, vertical=v_seam)
            if h_seam is not None:
                horizontals[(i, j)] = h_seam
            if record is not None:
                record[(i, j)] = {"horizontal": h_seam, "vertical": v_seam, "mask": mask}
            _insert(canvas, patch.data, x, y, mask)
    return HeightField(canvas, spacing)
