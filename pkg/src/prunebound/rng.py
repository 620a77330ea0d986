"""Seeded, splittable random number generation.

Every randomized procedure in the package draws from an RngHandle: a
(seed, stream) pair fed to a counter-based Philox generator through
numpy's SeedSequence. Identical pairs give identical draw sequences on
every platform, and child streams derived with `child(i)` are
statistically independent of the parent and of each other, which lets
per-trial or per-layer work run in any order without changing results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


def _splitmix64(x: int) -> int:
    """One step of the SplitMix64 mixer (public-domain constants)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class RngHandle:
    """Reproducible generator handle: a 64-bit seed plus a 64-bit stream id."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if not 0 <= self.stream <= _MASK64:
            raise ValueError("stream must fit in 64 unsigned bits")

    def generator(self) -> np.random.Generator:
        """Fresh Philox generator for this (seed, stream) pair."""
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(seq))

    def child(self, index: int) -> "RngHandle":
        """Derive an independent substream, e.g. one per trial or per layer."""
        if index < 0:
            raise ValueError("child index must be non-negative")
        mixed = _splitmix64(self.stream ^ _splitmix64(index))
        return RngHandle(self.seed, mixed)
