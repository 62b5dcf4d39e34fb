"""Tests for BL-9: Monte Carlo engine."""

from __future__ import annotations

import math

import numpy as np
import pytest

from pkg.errors import DomainError
from pkg.montecarlo.information import (
    binary_entropy,
    contingency,
    entropy,
    mutual_information,
    mutual_information_stderr,
)
from pkg.montecarlo.rng import RngStream, bernoulli, categorical, poisson_array, poisson_sample
from pkg.montecarlo.tally import Tally, merge_all


class TestRngStream:
    def test_same_seed_same_sequence(self):
        assert np.array_equal(RngStream(7).uniform(100), RngStream(7).uniform(100))

    def test_streams_independent(self):
        assert not np.array_equal(RngStream(7, 0).uniform(10), RngStream(7, 1).uniform(10))

    def test_child_independent_of_parent_position(self):
        """A child stream does not depend on how much the parent consumed."""
        a = RngStream(3)
        b = RngStream(3)
        b.uniform(1000)
        assert np.array_equal(a.child(2).uniform(20), b.child(2).uniform(20))

    def test_children_distinct(self):
        root = RngStream(3)
        assert not np.array_equal(root.child(0).uniform(10), root.child(1).uniform(10))

    def test_fresh_rewinds(self):
        s = RngStream(11, 4)
        first = s.uniform(5)
        assert np.array_equal(s.fresh().uniform(5), first)

    def test_seed_range(self):
        with pytest.raises(DomainError):
            RngStream(-1)
        with pytest.raises(DomainError):
            RngStream(2**64)


class TestSamplers:
    def test_poisson_zero_mean(self):
        assert poisson_sample(RngStream(0), 0.0) == 0

    def test_poisson_negative_mean(self):
        with pytest.raises(DomainError):
            poisson_sample(RngStream(0), -1.0)
        with pytest.raises(DomainError):
            poisson_array(RngStream(0), np.array([1.0, -2.0]))

    def test_poisson_mean(self):
        draws = poisson_array(RngStream(5), 20.0, size=20_000)
        assert draws.mean() == pytest.approx(20.0, abs=5 * math.sqrt(20.0 / 20_000))

    def test_bernoulli_rate(self):
        hits = bernoulli(RngStream(1), 0.3, 50_000)
        assert hits.mean() == pytest.approx(0.3, abs=5 * math.sqrt(0.21 / 50_000))

    def test_bernoulli_range(self):
        with pytest.raises(DomainError):
            bernoulli(RngStream(1), 1.5, 10)

    def test_categorical_rows(self):
        """Each row draws from its own distribution."""
        probs = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]] * 500)
        idx = categorical(RngStream(2), probs)
        assert np.all(idx[0::2] == 0)
        assert np.all(idx[1::2] == 2)

    def test_categorical_frequencies(self):
        p = np.array([0.125, 0.25, 0.625])
        idx = categorical(RngStream(9), np.tile(p, (40_000, 1)))
        freq = np.bincount(idx, minlength=3) / idx.size
        assert freq == pytest.approx(p, abs=0.01)

    def test_categorical_shape(self):
        with pytest.raises(DomainError):
            categorical(RngStream(0), np.array([0.5, 0.5]))


class TestTally:
    def test_mean_and_stderr(self):
        values = [1.0, 2.0, 3.0, 4.0]
        t = Tally.of(values)
        assert t.mean == pytest.approx(2.5)
        assert t.stderr == pytest.approx(np.std(values, ddof=1) / 2.0)

    def test_merge_is_order_free(self, rng):
        """Any grouping of partial tallies gives the identical total."""
        parts = [Tally.of(rng.normal(size=n)) for n in (3, 50, 7, 1, 20)]
        forward = merge_all(parts)
        backward = merge_all(reversed(parts))
        nested = (parts[0] + parts[1]) + (parts[2] + (parts[3] + parts[4]))
        assert forward == backward == nested

    def test_counts(self):
        t = Tally.of_counts(25, 100)
        assert t.mean == pytest.approx(0.25)
        assert t.stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 99))

    def test_empty(self):
        assert Tally.of([]).mean == 0.0
        assert Tally().stderr == 0.0

    def test_add(self):
        assert Tally().add(2.0).add(4.0) == Tally.of([2.0, 4.0])


class TestInformation:
    def test_entropy_uniform(self):
        assert entropy([0.25] * 4) == pytest.approx(2.0)

    def test_binary_entropy(self):
        assert binary_entropy(0.5) == pytest.approx(1.0)
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(0.11) == pytest.approx(0.4999, abs=1e-3)

    def test_perfect_correlation(self):
        assert mutual_information([[50, 0], [0, 50]]) == pytest.approx(1.0)

    def test_independent(self):
        assert mutual_information([[25, 25], [25, 25]]) == pytest.approx(0.0, abs=1e-12)

    def test_stderr_shrinks(self):
        small = mutual_information_stderr([[30, 10], [10, 30]])
        large = mutual_information_stderr([[3000, 1000], [1000, 3000]])
        assert large == pytest.approx(small / 10.0, rel=1e-9)

    def test_contingency_non_contiguous_labels(self):
        table = contingency(np.array([5, 5, 9, 9]), np.array([0, 7, 0, 0]))
        assert table.tolist() == [[1, 1], [2, 0]]

    def test_bad_tables(self):
        with pytest.raises(DomainError):
            mutual_information([1, 2, 3])
        with pytest.raises(DomainError):
            mutual_information([[0, 0], [0, 0]])
        with pytest.raises(DomainError):
            mutual_information([[1, -1], [0, 2]])
