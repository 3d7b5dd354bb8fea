"""Stationary Gaussian texture generators: random phase noise and spot noise."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .heightfield import HeightField
from .rng import as_stream
from .spectral import conjugate_index

DEFAULT_BLEND_BAND = 8


@dataclass(frozen=True, eq=False)
class PhaseField:
    """Random phase per DFT frequency, ``theta[q, r]`` for row/column frequencies."""

    theta: np.ndarray

    @property
    def width(self) -> int:
        return self.theta.shape[1]

    @property
    def height(self) -> int:
        return self.theta.shape[0]


def _pair_layout(height: int, width: int):
    """Row-major representatives of conjugate frequency pairs.

    Returns flat indices of every frequency that is visited before its
    conjugate (self-conjugate ones included, DC excluded), in row-major
    order, plus a mask telling which of them are self-conjugate.
    """
    flat = np.arange(height * width).reshape(height, width)
    conj = flat[conjugate_index(height)][:, conjugate_index(width)]
    rep = (flat <= conj)
    rep[0, 0] = False
    idx = flat[rep]
    self_conj = (conj[rep] == idx)
    return idx, conj.ravel()[idx], self_conj


def sample_phase(width: int, height: int, rng) -> PhaseField:
    """Hermitian-consistent uniform random phase.

    Frequencies are scanned in row-major order; each not-yet-assigned
    conjugate pair consumes one uniform draw ``u``. Free pairs get
    ``theta = pi - 2*pi*u`` (uniform on (-pi, pi]) and its negative on the
    partner; self-conjugate frequencies other than DC get ``pi`` if
    ``u < 1/2`` else ``0``. DC is fixed to 0 so the mean is kept.
    """
    if width < 1 or height < 1:
        raise ValueError("phase field needs positive dimensions")
    rng = as_stream(rng)
    idx, partner, self_conj = _pair_layout(height, width)
    u = rng.uniform(size=idx.size)
    theta = np.zeros(height * width)
    free = np.pi - 2.0 * np.pi * u
    binary = np.where(u < 0.5, np.pi, 0.0)
    vals = np.where(self_conj, binary, free)
    theta[idx] = vals
    neg = -vals
    neg[neg == -np.pi] = np.pi
    theta[partner[~self_conj]] = neg[~self_conj]
    return PhaseField(theta.reshape(height, width))


def rpn(field: HeightField, rng) -> HeightField:
    """Random phase noise: keep the Fourier modulus, replace the phase."""
    rng = as_stream(rng)
    phase = sample_phase(field.width, field.height, rng)
    spec = np.fft.fft2(field.data) * np.exp(1j * phase.theta)
    return field.with_data(np.fft.ifft2(spec).real)


def adsn(field: HeightField, rng) -> HeightField:
    """Asymptotic discrete spot noise.

    Convolves the normalised spot ``(I - mean)/sqrt(MN)`` circularly with unit
    white noise and adds the mean back, giving a Gaussian field with the
    input's mean and (circular) covariance.
    """
    rng = as_stream(rng)
    x = field.data
    mean = x.mean()
    spot = (x - mean) / math.sqrt(x.size)
    noise = rng.normal(size=x.shape)
    out = np.fft.ifft2(np.fft.fft2(spot) * np.fft.fft2(noise)).real
    return field.with_data(mean + out)


def sigmoid_ramp(band: int) -> np.ndarray:
    """Logistic weights rising from 0.01 to 0.99 across ``band`` pixels."""
    if band <= 0:
        return np.ones(0)
    slope = 2.0 * math.log(99.0)
    u = (np.arange(band) + 0.5) / band
    return 1.0 / (1.0 + np.exp(-slope * (u - 0.5)))


def _edge_weights(n: int, band: int, before: bool, after: bool) -> np.ndarray:
    w = np.ones(n)
    band = min(band, n // 2)
    ramp = sigmoid_ramp(band)
    if before and band:
        w[:band] = ramp
    if after and band:
        w[n - band:] = np.minimum(w[n - band:], ramp[::-1])
    return w


def extend_input(field: HeightField, target_w: int, target_h: int,
                 band: int = DEFAULT_BLEND_BAND) -> HeightField:
    """Embed a field centrally in a larger canvas filled with its mean.

    Borders that face padding are multiplied by a sigmoid ramp; the centred
    input is then offset and rescaled so that the output has exactly the
    input's mean and variance. With no padding on either axis the input is
    returned unchanged.
    """
    h, w = field.shape
    if target_w < w or target_h < h:
        raise ValueError(f"target {target_w}x{target_h} smaller than input {w}x{h}")
    if target_w == w and target_h == h:
        return field
    x = field.data
    mean = float(x.mean())
    var = float(np.mean((x - mean) ** 2))
    out = np.full((target_h, target_w), mean)
    if var == 0.0:
        return field.with_data(out)

    pad_x, pad_y = target_w - w, target_h - h
    y0, x0 = pad_y // 2, pad_x // 2
    wx = _edge_weights(w, band, x0 > 0, pad_x - x0 > 0)
    wy = _edge_weights(h, band, y0 > 0, pad_y - y0 > 0)
    weight = wy[:, None] * wx[None, :]
    centred = x - mean
    centred = centred - np.sum(weight * centred) / np.sum(weight)
    blended = weight * centred
    gain = math.sqrt(target_w * target_h * var / np.sum(blended ** 2))

    out[y0:y0 + h, x0:x0 + w] += gain * blended
    return field.with_data(out)
