"""
BL-9: Seedable random streams.

Every stochastic routine takes an RngStream. A stream is a Philox
counter-based generator keyed by (seed, stream_id, child indices) through a
numpy SeedSequence spawn key, so substreams never share state and the same
key always yields the same sequence.
"""

from __future__ import annotations

import numpy as np

from pkg.errors import DomainError

_SEED_LIMIT = 2**64


class RngStream:
    """Deterministic random stream identified by a seed and a spawn key."""

    __slots__ = ("seed", "spawn_key", "generator")

    def __init__(self, seed: int, stream_id: int = 0, *, _path: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < _SEED_LIMIT:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if stream_id < 0 or any(i < 0 for i in _path):
            raise DomainError("stream ids must be nonnegative")
        self.seed = seed
        self.spawn_key = (int(stream_id), *_path)
        self.generator = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(seed, spawn_key=self.spawn_key))
        )

    @property
    def stream_id(self) -> int:
        return self.spawn_key[0]

    def child(self, index: int) -> "RngStream":
        """Independent substream below this one (fresh state, not a fork of the current one)."""
        return RngStream(self.seed, self.spawn_key[0], _path=(*self.spawn_key[1:], int(index)))

    def fresh(self) -> "RngStream":
        """Same key, rewound to the start of the sequence."""
        return RngStream(self.seed, self.spawn_key[0], _path=self.spawn_key[1:])

    def uniform(self, size: int | tuple[int, ...] | None = None) -> np.ndarray | float:
        return self.generator.random(size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, spawn_key={self.spawn_key})"


def poisson_sample(stream: RngStream, mean: float) -> int:
    """One Poisson(mean) draw; mean 0 gives 0."""
    if not mean >= 0.0:
        raise DomainError(f"Poisson mean must be nonnegative, got {mean}")
    if mean == 0.0:
        return 0
    return int(stream.generator.poisson(mean))


def poisson_array(stream: RngStream, mean: float | np.ndarray, size: int | None = None) -> np.ndarray:
    means = np.asarray(mean, dtype=float)
    if np.any(~(means >= 0.0)):
        raise DomainError("Poisson means must be nonnegative")
    return stream.generator.poisson(means, size=size)


def bernoulli(stream: RngStream, p: float, size: int) -> np.ndarray:
    """Boolean array of independent trials with success probability p."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must be in [0, 1], got {p}")
    return stream.generator.random(size) < p


def categorical(stream: RngStream, probs: np.ndarray) -> np.ndarray:
    """Draw one category per row of a (n, k) probability table.

    Rows must sum to one; the last category absorbs rounding.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 2:
        raise DomainError("categorical expects an (n, k) table")
    if np.any(probs < -1e-15):
        raise DomainError("probabilities must be nonnegative")
    cum = np.cumsum(probs, axis=1)
    u = stream.generator.random(probs.shape[0])
    idx = (u[:, None] >= cum[:, :-1]).sum(axis=1)
    return idx.astype(np.int64)
