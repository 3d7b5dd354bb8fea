"""Single-ring model: shape times tilt plus noise, and random ring parameters.

Each ring has three concentric support bands around the tool radius ``r``:

* inner accumulation ``[r - w- - w+i, r - w-)``
* indentation ``[r - w-, r]``
* outer accumulation ``(r, r + w+o]``

The functions here evaluate one ring at arbitrary points with plain numpy;
the grid renderer uses a compiled kernel that must agree with them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..rng import as_stream
from .config import MillConfig
from .toolpath import ToolPath

SHAPE_CODES = {"indicator": 0, "cosine": 1, "bump": 2}
INTERACTION_CODES = {"min": 0, "latest": 1, "convex": 2}


@dataclass
class RingParams:
    index: int
    center: np.ndarray
    theta: float
    radius: float
    w_minus: float
    w_inner: float
    w_outer: float
    l_minus: float
    h_minus: float
    l_inner: float
    h_inner: float
    l_outer: float
    h_outer: float
    noise_tau: np.ndarray = field(default_factory=lambda: np.zeros(0))
    noise_shift: np.ndarray = field(default_factory=lambda: np.zeros(0))
    a: float = 1.0
    b: float = 1.0

    @property
    def noise_count(self) -> int:
        return len(self.noise_tau)

    def outer_radius(self, shape: str) -> float:
        return self.radius + self.w_outer if shape == "bump" else self.radius

    def inner_radius(self, shape: str) -> float:
        if shape == "bump":
            return self.radius - self.w_minus - self.w_inner
        return self.radius - self.w_minus


def _polar(ring: RingParams, x):
    x = np.asarray(x, dtype=float)
    dx = x[..., 0] - ring.center[0]
    dy = x[..., 1] - ring.center[1]
    return dx, dy, np.hypot(dx, dy)


def band_masks(ring: RingParams, dist):
    """Boolean masks of the inner, indentation and outer bands."""
    r, wm = ring.radius, ring.w_minus
    if wm <= 0:
        empty = np.zeros(np.shape(dist), dtype=bool)
        return empty, empty, empty
    inner = (dist >= r - wm - ring.w_inner) & (dist < r - wm)
    minus = (dist >= r - wm) & (dist <= r)
    outer = (dist > r) & (dist <= r + ring.w_outer)
    return inner, minus, outer


def support_mask(ring: RingParams, x, shape: str):
    """Points where the ring acts: the indentation, plus both accumulations for ``bump``."""
    inner, minus, outer = band_masks(ring, _polar(ring, x)[2])
    if shape == "bump":
        return inner | minus | outer
    return minus


def shape_value(ring: RingParams, x, shape: str):
    _, _, dist = _polar(ring, x)
    inner, minus, outer = band_masks(ring, dist)
    r, wm = ring.radius, ring.w_minus
    out = np.zeros(np.shape(dist))
    if shape == "indicator":
        out[minus] = -1.0
        return out
    if shape not in ("cosine", "bump"):
        raise ValueError(f"unknown shape {shape!r}")
    d_minus = (dist - r + wm / 2.0) * 2.0 / wm if wm > 0 else np.zeros_like(dist)
    out[minus] = -np.cos(0.5 * np.pi * d_minus[minus])
    if shape == "bump":
        if ring.w_inner > 0:
            d_in = (dist - (r - wm - ring.w_inner / 2.0)) * 2.0 / ring.w_inner
            out[inner] = np.cos(0.5 * np.pi * d_in[inner])
        if ring.w_outer > 0:
            d_out = (dist - (r + ring.w_outer / 2.0)) * 2.0 / ring.w_outer
            out[outer] = np.cos(0.5 * np.pi * d_out[outer])
    return out


def plane_value(ring: RingParams, x, low: float, high: float):
    """Plane rising from ``low`` at the rear to ``high`` at the front of the tool circle."""
    dx, dy, _ = _polar(ring, x)
    along = math.cos(ring.theta) * dx + math.sin(ring.theta) * dy
    return (high - low) / (2.0 * ring.radius) * along + 0.5 * (high + low)


def tilt_value(ring: RingParams, x):
    _, _, dist = _polar(ring, x)
    inner, minus, outer = band_masks(ring, dist)
    out = np.zeros(np.shape(dist))
    for mask, lo, hi in ((inner, ring.l_inner, ring.h_inner),
                         (minus, ring.l_minus, ring.h_minus),
                         (outer, ring.l_outer, ring.h_outer)):
        out[mask] = np.asarray(plane_value(ring, x, lo, hi))[mask]
    return out


def noise_value(ring: RingParams, x, shape: str):
    """Mean of the ring's sine terms in the polar angle, on the ring support."""
    dx, dy, _ = _polar(ring, x)
    out = np.zeros(np.shape(dx))
    if ring.noise_count == 0:
        return out
    mask = support_mask(ring, x, shape)
    angle = np.arctan2(dy, dx)
    total = np.zeros(np.shape(dx))
    for tau, xi in zip(ring.noise_tau, ring.noise_shift):
        total += np.sin(tau * angle + xi)
    out[mask] = total[mask] / ring.noise_count
    return out


def ring_value(ring: RingParams, x, shape: str):
    return shape_value(ring, x, shape) * tilt_value(ring, x) + noise_value(ring, x, shape)


def weight_value(ring: RingParams, x, shape: str):
    """Convex blending weight: a plane from ``a`` (rear) to ``b`` (front) on the support, clipped to [0, 1]."""
    mask = support_mask(ring, x, shape)
    w = np.clip(plane_value(ring, x, ring.a, ring.b), 0.0, 1.0)
    return np.where(mask, w, 0.0)


def sample_rings(path: ToolPath, cfg: MillConfig, rng) -> list[RingParams]:
    """Random parameters for one ring per path point, in milling order.

    Draws come from three sub-streams: ``rings`` (centre jitter, widths,
    tilts, convex weights), ``noise`` (term counts, frequencies, shifts) and
    ``path/order`` (which rings swap their temporal order).
    """
    rng = as_stream(rng)
    n = len(path)
    if n == 0:
        return []
    s_rings = rng.substream("rings")
    s_noise = rng.substream("noise")
    s_order = rng.substream("path").substream("order")
    r = cfg.radius

    jitter = s_rings.normal(size=(n, 2)) @ cfg.center_chol.T
    centers = path.centers + jitter
    w_minus = np.clip(s_rings.normal(cfg.w_minus_mean, cfg.w_minus_std, n), 0.0, r)
    w_inner = np.clip(s_rings.normal(cfg.w_inner_mean, cfg.w_inner_std, n), 0.0, r - w_minus)
    w_outer = np.clip(s_rings.normal(cfg.w_outer_mean, cfg.w_outer_std, n), 0.0, cfg.w_outer_max)
    l_minus = s_rings.normal(cfg.l_minus_mean, cfg.l_minus_std, n)
    h_minus = s_rings.normal(cfg.h_minus_mean, cfg.h_minus_std, n)
    l_inner = s_rings.normal(cfg.l_inner_mean, cfg.l_inner_std, n)
    h_inner = s_rings.normal(cfg.h_inner_mean, cfg.h_inner_std, n)
    l_outer = s_rings.normal(cfg.l_outer_mean, cfg.l_outer_std, n)
    h_outer = s_rings.normal(cfg.h_outer_mean, cfg.h_outer_std, n)
    a = s_rings.uniform(cfg.a_min, cfg.a_max, n)
    b = s_rings.uniform(cfg.b_min, cfg.b_max, n)

    counts = s_noise.poisson(cfg.noise_lambda, n)
    total = int(counts.sum())
    taus = s_noise.poisson(cfg.noise_tau, total).astype(float)
    shifts = np.pi - 2.0 * np.pi * s_noise.uniform(size=total)
    bounds = np.concatenate([[0], np.cumsum(counts)])

    order = np.arange(n)
    m = math.ceil(cfg.reorder_fraction * n - 1e-9)
    if m > 1:
        chosen = np.sort(s_order.choice(n, size=m, replace=False))
        order[chosen] = chosen[s_order.permutation(m)]

    rings = []
    for k, src in enumerate(order):
        lo, hi = bounds[src], bounds[src + 1]
        rings.append(RingParams(
            index=k, center=centers[src].copy(), theta=float(path.directions[src]), radius=r,
            w_minus=float(w_minus[src]), w_inner=float(w_inner[src]), w_outer=float(w_outer[src]),
            l_minus=float(l_minus[src]), h_minus=float(h_minus[src]),
            l_inner=float(l_inner[src]), h_inner=float(h_inner[src]),
            l_outer=float(l_outer[src]), h_outer=float(h_outer[src]),
            noise_tau=taus[lo:hi].copy(), noise_shift=shifts[lo:hi].copy(),
            a=float(a[src]), b=float(b[src])))
    return rings


@dataclass(frozen=True, eq=False)
class RingArrays:
    """Column layout of a ring list for the compiled renderer.

    ``scalars[k]`` holds ``cx, cy, cos(theta), sin(theta), w-, w+i, w+o,
    l-, h-, l+i, h+i, l+o, h+o, a, b``; noise terms of ring ``k`` are
    ``tau[start[k]:start[k+1]]`` and the matching ``shift`` entries.
    """

    scalars: np.ndarray
    radius: float
    start: np.ndarray
    tau: np.ndarray
    shift: np.ndarray

    def __len__(self):
        return len(self.scalars)

    @classmethod
    def pack(cls, rings: list[RingParams]) -> "RingArrays":
        if not rings:
            return cls(np.zeros((0, 15)), 1.0, np.zeros(1, dtype=np.int64), np.zeros(0), np.zeros(0))
        radius = rings[0].radius
        if any(rg.radius != radius for rg in rings):
            raise ValueError("all rings must share one tool radius")
        scalars = np.array([[rg.center[0], rg.center[1], math.cos(rg.theta), math.sin(rg.theta),
                             rg.w_minus, rg.w_inner, rg.w_outer, rg.l_minus, rg.h_minus,
                             rg.l_inner, rg.h_inner, rg.l_outer, rg.h_outer, rg.a, rg.b]
                            for rg in rings])
        counts = np.array([rg.noise_count for rg in rings], dtype=np.int64)
        start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        tau = np.concatenate([rg.noise_tau for rg in rings]).astype(float)
        shift = np.concatenate([rg.noise_shift for rg in rings]).astype(float)
        return cls(np.ascontiguousarray(scalars), float(radius), start, tau, shift)

    def radii(self, shape: str) -> tuple[np.ndarray, np.ndarray]:
        """Inner and outer radius of every ring's support."""
        s, r = self.scalars, self.radius
        if shape == "bump":
            return r - s[:, 4] - s[:, 5], r + s[:, 6]
        return r - s[:, 4], np.full(len(s), r)

    @property
    def active(self) -> np.ndarray:
        return self.scalars[:, 4] > 0
