"""Sandblasted-surface synthesis from one measured exemplar.

Two steps: the exemplar is down-sampled to the target pixel spacing, then the
target size is reached by generating directly on a crop, by padding, or by
stitching many generated patches.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .heightfield import HeightField, crop, downsample_nn
from .quilt import StitchPlan, stitch_all
from .rng import as_stream
from .spectral import periodic_component
from .stationary import DEFAULT_BLEND_BAND, adsn, extend_input, rpn

log = logging.getLogger(__name__)

METHODS = {"rpn": rpn, "adsn": adsn}
STRATEGIES = ("auto", "crop", "pad", "stitch")


@dataclass(frozen=True)
class SandblastConfig:
    target_w: int
    target_h: int
    target_spacing_um: float
    method: str = "rpn"
    patch_size: int = 256
    overlap: int = 128
    seed: int = 0
    size_strategy: str = "auto"
    blend_band: int = DEFAULT_BLEND_BAND

    def __post_init__(self):
        if self.target_w < 1 or self.target_h < 1:
            raise ValueError("target size must be positive")
        if not self.target_spacing_um > 0:
            raise ValueError("target spacing must be positive")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {sorted(METHODS)}")
        if self.size_strategy not in STRATEGIES:
            raise ValueError(f"unknown size strategy {self.size_strategy!r}, expected one of {STRATEGIES}")
        if not 1 < self.overlap < self.patch_size:
            raise ValueError(f"need 1 < overlap < patch_size, got {self.overlap}, {self.patch_size}")


def preprocess_periodic(field: HeightField) -> HeightField:
    """Periodic component of ``field``; removes border jumps before FFT-based generation."""
    return periodic_component(field)


def spacing_factor(input_spacing_um: float, target_spacing_um: float) -> float:
    factor = target_spacing_um / input_spacing_um
    # spacings such as 1.75 -> 5.25 give 2.9999999999999996
    if abs(factor - round(factor)) < 1e-9:
        factor = float(round(factor))
    if factor < 1.0:
        raise ValueError(
            f"target spacing {target_spacing_um} um is finer than the input spacing "
            f"{input_spacing_um} um; the input lacks that detail")
    return factor


def choose_branch(down_w: int, down_h: int, cfg: SandblastConfig) -> str:
    """Size-adaptation branch for a down-sampled input of ``down_w x down_h``."""
    if cfg.size_strategy != "auto":
        return cfg.size_strategy
    if down_w >= cfg.target_w and down_h >= cfg.target_h:
        return "crop"
    return "stitch"


def _centre_crop(field: HeightField, w: int, h: int) -> HeightField:
    return crop(field, (field.width - w) // 2, (field.height - h) // 2, w, h)


def synthesize_sandblast(field: HeightField, cfg: SandblastConfig, *, threads: int = 1) -> HeightField:
    """Generate a ``target_w x target_h`` texture at ``target_spacing_um``.

    ``threads`` only affects how many stitch patches are generated at once;
    the result does not depend on it.
    """
    factor = spacing_factor(field.spacing_um, cfg.target_spacing_um)
    down = downsample_nn(field, factor)
    down = HeightField(down.data, cfg.target_spacing_um)
    generate = METHODS[cfg.method]
    rng = as_stream(cfg.seed)
    branch = choose_branch(down.width, down.height, cfg)
    log.info("input %dx%d -> %dx%d at %g um, branch %s",
             field.width, field.height, down.width, down.height, cfg.target_spacing_um, branch)

    if branch == "crop":
        if down.width < cfg.target_w or down.height < cfg.target_h:
            raise ValueError(
                f"crop strategy needs a down-sampled input of at least {cfg.target_w}x{cfg.target_h}, "
                f"got {down.width}x{down.height}")
        window = _centre_crop(down, cfg.target_w, cfg.target_h)
        return generate(preprocess_periodic(window), rng.substream("generate"))

    if branch == "pad":
        base = preprocess_periodic(down)
        if base.width > cfg.target_w or base.height > cfg.target_h:
            base = _centre_crop(base, min(base.width, cfg.target_w), min(base.height, cfg.target_h))
        padded = extend_input(base, cfg.target_w, cfg.target_h, band=cfg.blend_band)
        return generate(padded, rng.substream("generate"))

    size = cfg.patch_size
    if down.width < size or down.height < size:
        raise ValueError(
            f"stitching needs a down-sampled input of at least {size}x{size}, got {down.width}x{down.height}")
    plan = StitchPlan.covering(max(cfg.target_w, cfg.target_h), size, cfg.overlap)

    def make_patch(i, j, stream):
        x0 = int(stream.integers(0, down.width - size + 1))
        y0 = int(stream.integers(0, down.height - size + 1))
        window = crop(down, x0, y0, size, size)
        return generate(preprocess_periodic(window), stream.substream("generate"))

    patches_rng = rng.substream("patches")
    if threads > 1:
        jobs = [(i, j) for j in range(plan.n) for i in range(plan.n)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            done = dict(zip(jobs, pool.map(
                lambda ij: make_patch(ij[0], ij[1], patches_rng.substream(f"patch/{ij[1]}/{ij[0]}")), jobs)))
        provider = lambda i, j, stream: done[(i, j)]  # noqa: E731
    else:
        provider = make_patch
    out = stitch_all(plan, provider, patches_rng)
    return crop(out, 0, 0, cfg.target_w, cfg.target_h)
