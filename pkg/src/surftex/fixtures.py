"""Deterministic pseudo-measurements for tests and demos.

Real profilometer scans are not shipped; these stand-ins have fixed,
documented statistics.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .heightfield import HeightField
from .mill import Grid, MillConfig, adapt_height, simulate
from .rng import RandomStream

# declared statistics of the fixtures (heights in um)
SANDBLASTED = {"width": 512, "height": 512, "spacing_um": 1.75, "mean_um": 5.0, "std_um": 1.2,
               "smoothing_px": 2.0}
MILLED = {"width": 256, "height": 256, "spacing_um": 12.2, "mean_um": 0.0, "std_um": 2.0}
KINDS = ("sandblasted", "milled")


def sandblasted_fixture(seed: int = 0, width: int | None = None, height: int | None = None,
                        spacing_um: float | None = None) -> HeightField:
    """Gaussian-smoothed white noise with the declared mean and standard deviation."""
    p = SANDBLASTED
    w, h = width or p["width"], height or p["height"]
    rng = RandomStream(seed, "fixture/sandblasted")
    noise = rng.normal(size=(h, w))
    smooth = ndimage.gaussian_filter(noise, sigma=p["smoothing_px"], mode="reflect")
    field = HeightField(smooth, spacing_um or p["spacing_um"])
    return adapt_height(field, p["mean_um"], p["std_um"] ** 2)


def milled_fixture(seed: int = 0, width: int | None = None, height: int | None = None,
                   spacing_um: float | None = None) -> HeightField:
    """Parallel face-milling render with mild jitter and noise, adapted to the declared stats."""
    p = MILLED
    cfg = MillConfig(w_minus_std=0.02, w_outer_std=0.01, noise_lambda=3, noise_tau=40,
                     center_cov_xx=1e-4, center_cov_yy=1e-4, reorder_fraction=0.05)
    grid = Grid(width or p["width"], height or p["height"], spacing_um or p["spacing_um"])
    result = simulate(cfg, grid, RandomStream(seed, "fixture/milled"))
    return adapt_height(result.field, p["mean_um"], p["std_um"] ** 2)


def fixture_gen(kind: str, seed: int = 0, **kw) -> HeightField:
    if kind == "sandblasted":
        return sandblasted_fixture(seed, **kw)
    if kind == "milled":
        return milled_fixture(seed, **kw)
    raise ValueError(f"unknown fixture kind {kind!r}, expected one of {KINDS}")


def declared_stats(kind: str) -> tuple[float, float]:
    """Declared ``(mean, variance)`` of a fixture kind."""
    p = {"sandblasted": SANDBLASTED, "milled": MILLED}[kind]
    return p["mean_um"], p["std_um"] ** 2


def ramp(width: int, height: int, spacing_um: float = 1.0) -> HeightField:
    """Linear ramp in x; a worst case for border jumps."""
    return HeightField(np.tile(np.linspace(0.0, 1.0, width), (height, 1)), spacing_um)


def noise_patch(width: int, height: int, seed: int = 0, spacing_um: float = 1.0) -> HeightField:
    rng = RandomStream(seed, "fixture/noise")
    return HeightField(rng.normal(size=(height, width)), spacing_um)

