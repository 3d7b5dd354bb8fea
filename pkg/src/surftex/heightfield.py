"""Height images with physical pixel spacing, plus ``.hfld`` file I/O.

A :class:`HeightField` stores heights in micrometres on a square pixel grid.
``data[y, x]`` is the height at column ``x`` and row ``y``; the array is
row-major and read-only once the field is constructed.

The ``.hfld`` format is an ASCII header line followed by a little-endian
float32 payload::

    HFLD v1 <width> <height> <spacing_um>\\n
    <width*height float32 values, row-major>

Variances throughout the package use the biased (divide-by-N) convention.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"HFLD"
VERSION = b"v1"
_PAYLOAD_DTYPE = np.dtype("<f4")


class HfldError(ValueError):
    """Base class for malformed ``.hfld`` files."""

    code = "hfld"


class BadMagicError(HfldError):
    code = "bad-magic"


class BadHeaderError(HfldError):
    code = "bad-header"


class TruncatedPayloadError(HfldError):
    code = "truncated-payload"


class NonFiniteError(HfldError):
    code = "non-finite"


@dataclass(frozen=True, eq=False)
class HeightField:
    """Rectangular grid of heights (µm) with square pixels of ``spacing_um``."""

    data: np.ndarray
    spacing_um: float

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"height data must be a non-empty 2d array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("height data contains non-finite values")
        spacing = float(self.spacing_um)
        if not (spacing > 0 and math.isfinite(spacing)):
            raise ValueError(f"spacing_um must be a positive finite number, got {self.spacing_um!r}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing_um", spacing)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def with_data(self, data) -> "HeightField":
        """Same spacing, new heights."""
        return HeightField(data, self.spacing_um)

    def __repr__(self):
        return f"HeightField({self.width}x{self.height}, spacing_um={self.spacing_um})"


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    variance: float
    min: float
    max: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def stats(field: HeightField) -> SummaryStats:
    """Mean, biased variance, min and max of a field."""
    x = field.data
    mean = float(x.mean())
    var = float(np.mean((x - mean) ** 2))
    lo, hi = float(x.min()), float(x.max())
    # rounding can push a constant field's mean one ulp outside [min, max]
    mean = min(max(mean, lo), hi)
    return SummaryStats(mean=mean, variance=var, min=lo, max=hi)


def write_hfld(field: HeightField, path) -> None:
    """Write ``field`` to ``path``; heights are stored as float32."""
    header = f"HFLD v1 {field.width} {field.height} {field.spacing_um!r}\n".encode("ascii")
    payload = field.data.astype(_PAYLOAD_DTYPE).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_hfld(path) -> HeightField:
    with open(path, "rb") as fh:
        blob = fh.read()
    return parse_hfld(blob)


def parse_hfld(blob: bytes) -> HeightField:
    if not blob.startswith(MAGIC + b" "):
        raise BadMagicError("bad magic: not an HFLD file")
    end = blob.find(b"\n")
    if end < 0:
        raise BadHeaderError("header line is not terminated")
    parts = blob[:end].split(b" ")
    if len(parts) != 5 or parts[1] != VERSION:
        raise BadHeaderError(f"malformed header {blob[:end]!r}")
    try:
        width, height = int(parts[2]), int(parts[3])
        spacing = float(parts[4])
    except ValueError as exc:
        raise BadHeaderError(f"malformed header {blob[:end]!r}") from exc
    if width <= 0 or height <= 0 or not (spacing > 0 and math.isfinite(spacing)):
        raise BadHeaderError(f"invalid dimensions or spacing in header {blob[:end]!r}")
    payload = blob[end + 1:]
    expected = width * height * _PAYLOAD_DTYPE.itemsize
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"payload has {len(payload)} bytes, expected {expected} for {width}x{height}")
    data = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE).reshape(height, width)
    if not np.all(np.isfinite(data)):
        raise NonFiniteError("payload contains NaN or Inf")
    return HeightField(data.astype(np.float64), spacing)


def read_ascii(path, spacing_um: float = 1.0) -> HeightField:
    """Import a whitespace-separated matrix (one image row per line)."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([float(tok) for tok in line.split()])
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError(f"{path}: rows must be non-empty and of equal length")
    return HeightField(np.array(rows), spacing_um)


def atomic_write(path, writer) -> None:
    """Run ``writer(tmp_path)`` and move the result to ``path``; no partial files on failure."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def crop(field: HeightField, x0: int, y0: int, w: int, h: int) -> HeightField:
    if w < 1 or h < 1 or x0 < 0 or y0 < 0 or x0 + w > field.width or y0 + h > field.height:
        raise IndexError(
            f"crop window ({x0}, {y0}, {w}, {h}) outside {field.width}x{field.height} field")
    return field.with_data(field.data[y0:y0 + h, x0:x0 + w])


def downsampled_size(size: int, factor: float) -> int:
    # tolerate factors like 3.0000000000000004 coming from spacing ratios
    return max(1, math.ceil(size / factor - 1e-9))


def _nearest_indices(size: int, factor: float) -> np.ndarray:
    n = downsampled_size(size, factor)
    idx = np.floor(np.arange(n) * factor + 0.5).astype(np.int64)
    return np.clip(idx, 0, size - 1)


def downsample_nn(field: HeightField, factor: float) -> HeightField:
    """Nearest-neighbour down-sampling by ``factor >= 1``.

    Output pixel ``i`` takes source index ``floor(i*factor + 0.5)`` (clamped),
    so integer factors reduce to plain decimation. The spacing grows by
    ``factor``.
    """
    factor = float(factor)
    if not factor >= 1.0:
        raise ValueError(f"down-sampling factor must be >= 1, got {factor} (super-resolution is not supported)")
    if factor == 1.0:
        return field
    rows = _nearest_indices(field.height, factor)
    cols = _nearest_indices(field.width, factor)
    return HeightField(field.data[np.ix_(rows, cols)], field.spacing_um * factor)
