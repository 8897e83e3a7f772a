"""Seeded random streams. Trial ``i`` of an experiment draws from ``rng.spawn(i)``,
so results do not depend on evaluation order."""

from __future__ import annotations

import numpy as np


class SeededRng:
    def __init__(self, seed: int, stream: tuple[int, ...] = ()):
        if not 0 <= int(seed) < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.stream = tuple(stream)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.stream))
        )

    def spawn(self, index: int) -> "SeededRng":
        return SeededRng(self.seed, self.stream + (int(index),))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def __getattr__(self, name):
        # random, integers, choice, standard_normal, ... forward to the generator
        if name.startswith("_"):
            raise AttributeError(name)
        return getattr(self._gen, name)

    def bits(self, k: int) -> tuple[int, ...]:
        return tuple(int(b) for b in self._gen.integers(0, 2, size=k))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream={self.stream})"


def as_rng(rng) -> SeededRng | np.random.Generator:
    if rng is None:
        return SeededRng(0)
    if isinstance(rng, (int, np.integer)):
        return SeededRng(int(rng))
    return rng
