"""Fourier-domain tools for comparing and preprocessing height fields."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .heightfield import HeightField


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Unnormalised 2d DFT coefficients; DC at ``coeffs[0, 0]``."""

    coeffs: np.ndarray

    @property
    def width(self) -> int:
        return self.coeffs.shape[1]

    @property
    def height(self) -> int:
        return self.coeffs.shape[0]

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.coeffs)

    def hermitian_error(self) -> float:
        """Largest ``|c(-xi) - conj(c(xi))|`` relative to the largest modulus."""
        c = self.coeffs
        mirrored = np.roll(c[::-1, ::-1], shift=(1, 1), axis=(0, 1))
        scale = max(float(np.abs(c).max()), np.finfo(float).tiny)
        return float(np.abs(mirrored - np.conj(c)).max()) / scale


def forward(field: HeightField) -> SpectralField:
    return SpectralField(np.fft.fft2(field.data))


def inverse(spec: SpectralField, spacing_um: float, *, imag_tol: float = 1e-9) -> HeightField:
    """Back-transform to a real field, rejecting coefficients that are not Hermitian."""
    out = np.fft.ifft2(spec.coeffs)
    scale = max(float(np.abs(out.real).max()), 1.0)
    residue = float(np.abs(out.imag).max())
    if residue > imag_tol * scale:
        raise ValueError(f"inverse transform is not real (imaginary residue {residue:.3g})")
    return HeightField(out.real, spacing_um)


def conjugate_index(n: int) -> np.ndarray:
    """Index of ``-k mod n`` for every ``k`` in ``range(n)``."""
    return (-np.arange(n)) % n


def autocorrelation(field: HeightField) -> HeightField:
    """Circular autocovariance of the centred field, lag (0, 0) at ``(h//2, w//2)``.

    The lag-0 value equals the biased variance.
    """
    x = field.data - field.data.mean()
    power = np.abs(np.fft.fft2(x)) ** 2
    acf = np.fft.ifft2(power).real / x.size
    return field.with_data(np.fft.fftshift(acf))


def border_jump_energy(data: np.ndarray) -> float:
    """Sum of squared differences between opposite image borders."""
    data = np.asarray(data, dtype=float)
    return float(np.sum((data[0, :] - data[-1, :]) ** 2) + np.sum((data[:, 0] - data[:, -1]) ** 2))


def periodic_decompose(field: HeightField) -> tuple[HeightField, HeightField]:
    """Split a field into a periodic component and a smooth residual.

    The smooth part solves a discrete Poisson problem whose right-hand side is
    the jump across the image borders; the periodic part is ``field - smooth``
    and keeps the field's mean.
    """
    if field.width < 2 or field.height < 2:
        raise ValueError("periodic decomposition needs at least 2x2 pixels")
    u = field.data
    m, n = u.shape
    v = np.zeros_like(u)
    du = u[-1, :] - u[0, :]
    v[0, :] += du
    v[-1, :] -= du
    du = u[:, -1] - u[:, 0]
    v[:, 0] += du
    v[:, -1] -= du

    cos_m = np.cos(2.0 * np.pi * np.arange(m) / m)
    cos_n = np.cos(2.0 * np.pi * np.arange(n) / n)
    symbol = 2.0 * cos_m[:, None] + 2.0 * cos_n[None, :] - 4.0
    symbol[0, 0] = 1.0
    s_hat = np.fft.fft2(v) / symbol
    s_hat[0, 0] = 0.0
    smooth = np.fft.ifft2(s_hat).real
    return field.with_data(u - smooth), field.with_data(smooth)


def periodic_component(field: HeightField) -> HeightField:
    return periodic_decompose(field)[0]


@dataclass(frozen=True, eq=False)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["edge_low", "edge_high", "count"])
            for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
                writer.writerow([repr(float(lo)), repr(float(hi)), int(c)])


def histogram(field: HeightField, nbins: int = 64) -> Histogram:
    """Equal-width bins over ``[min, max]``; the maximum lands in the last bin.

    A constant field gets the unit range centred on its value, as numpy does.
    """
    if nbins < 1:
        raise ValueError("nbins must be >= 1")
    counts, edges = np.histogram(field.data, bins=int(nbins))
    return Histogram(edges, counts.astype(np.int64))


def match_histogram(source: HeightField, reference: HeightField) -> HeightField:
    """Give each source pixel the reference value of equal rank.

    Ranks come from a stable sort in row-major scan order, so ties are
    resolved by scan position.
    """
    if source.data.size != reference.data.size:
        raise ValueError(
            f"pixel counts differ: {source.data.size} vs {reference.data.size}")
    order = np.argsort(source.data, axis=None, kind="stable")
    ref_sorted = np.sort(reference.data, axis=None, kind="stable")
    out = np.empty(source.data.size)
    out[order] = ref_sorted
    return source.with_data(out.reshape(source.shape))


def profile_period(profile, *, max_fraction: float = 2.0 / 3.0, depth: float = 0.5) -> float:
    """Dominant period (in samples) along the first axis of a profile or image.

    Uses the mean squared difference between the profile and its shifted
    copy, which vanishes at exact periods however few of them fit in the
    window. Past the initial rise the first local minimum below ``depth``
    times the median difference is taken (the deepest one if none is that
    low) and refined by a parabola through its neighbours. Lags run up to
    ``max_fraction`` of the length. For a 2d array the differences of all
    columns are pooled, so the period is measured along the rows.
    """
    x = np.asarray(profile, dtype=float)
    n = x.shape[0]
    top = int(n * max_fraction)
    if top < 4 or np.ptp(x) == 0:
        raise ValueError("profile is constant or too short")
    diff = np.array([np.mean((x[lag:] - x[:n - lag]) ** 2) for lag in range(top)])
    peak = diff.max()
    risen = np.nonzero(diff >= 0.5 * peak)[0]
    start = int(risen[0])
    minima = [k for k in range(start + 1, top - 1) if diff[k] <= diff[k - 1] and diff[k] < diff[k + 1]]
    if not minima:
        raise ValueError("no period found within the profile")
    level = depth * np.median(diff[start:])
    deep = [k for k in minima if diff[k] <= level]
    k = deep[0] if deep else min(minima, key=lambda m: diff[m])
    a, b, c = diff[k - 1], diff[k], diff[k + 1]
    denom = a - 2 * b + c
    shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
    return k + shift
