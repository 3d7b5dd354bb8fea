"""Named, reproducible random streams.

Every stream is a Philox-4x64 counter-based generator whose 128-bit key is
the BLAKE2b digest of ``"<seed>:<name>"``. Sub-streams get their own key, so
adding draws to one stage never shifts the draws of another. For a fixed
numpy version the values are identical on every platform.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _key(seed: int, name: str) -> int:
    digest = hashlib.blake2b(f"{int(seed)}:{name}".encode(), digest_size=16).digest()
    return int.from_bytes(digest, "little")


class RandomStream:
    """Deterministic random stream identified by ``(seed, name)``."""

    def __init__(self, seed: int = 0, name: str = "root"):
        if not -(2**63) <= int(seed) < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {seed}")
        self.seed = int(seed)
        self.name = name
        self.generator = np.random.Generator(np.random.Philox(key=_key(self.seed, name)))

    def substream(self, name: str) -> "RandomStream":
        return RandomStream(self.seed, f"{self.name}/{name}")

    @property
    def position(self) -> int:
        """Philox block counter; advances as values are drawn."""
        state = self.generator.bit_generator.state["state"]["counter"]
        return int(sum(int(c) << (64 * i) for i, c in enumerate(state)))

    # thin pass-throughs used across the package
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def poisson(self, lam, size=None):
        return self.generator.poisson(lam, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def permutation(self, x):
        return self.generator.permutation(x)

    def choice(self, a, size=None, replace=True):
        return self.generator.choice(a, size=size, replace=replace)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, name={self.name!r})"


def as_stream(rng) -> RandomStream:
    """Accept a stream or a plain integer seed."""
    if isinstance(rng, RandomStream):
        return rng
    return RandomStream(int(rng))
