"""
BL-9: Tally accumulators.

Sums are kept as exact rationals so merging partial tallies from independent
batches gives the same result in any grouping or order.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class Tally(BaseModel):
    """count, sum and sum of squares of one tracked statistic."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    count: int = 0
    total: Fraction = Field(default_factory=Fraction)
    total_sq: Fraction = Field(default_factory=Fraction)

    @classmethod
    def of(cls, values: Iterable[float] | np.ndarray) -> "Tally":
        arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
        if arr.size == 0:
            return cls()
        return cls(
            count=int(arr.size),
            total=Fraction(math.fsum(arr.tolist())),
            total_sq=Fraction(math.fsum((arr * arr).tolist())),
        )

    @classmethod
    def of_counts(cls, successes: int, trials: int) -> "Tally":
        """Tally of a 0/1 indicator with the given number of ones."""
        return cls(count=int(trials), total=Fraction(int(successes)), total_sq=Fraction(int(successes)))

    def add(self, value: float) -> "Tally":
        v = Fraction(float(value))
        return Tally(count=self.count + 1, total=self.total + v, total_sq=self.total_sq + v * v)

    def merge(self, other: "Tally") -> "Tally":
        return Tally(
            count=self.count + other.count,
            total=self.total + other.total,
            total_sq=self.total_sq + other.total_sq,
        )

    def __add__(self, other: "Tally") -> "Tally":
        return self.merge(other)

    @property
    def mean(self) -> float:
        if self.count == 0:
            return 0.0
        return float(self.total / self.count)

    @property
    def variance(self) -> float:
        """Unbiased sample variance."""
        if self.count < 2:
            return 0.0
        n = self.count
        return float((self.total_sq - self.total * self.total / n) / (n - 1))

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(max(self.variance, 0.0) / self.count)


def merge_all(tallies: Iterable[Tally]) -> Tally:
    out = Tally()
    for t in tallies:
        out = out.merge(t)
    return out
