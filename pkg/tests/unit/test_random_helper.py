"""
Unit tests for the RandomHelper class.
"""

import numpy as np
import pytest

from splurge_gibbs.exceptions import SplurgeRangeError
from splurge_gibbs.random_helper import RandomHelper
from splurge_gibbs.symbolic import SymbolicHelper, SystemSpec


class TestGenerator:
    """Test seeded generators."""

    def test_same_stream_repeats(self):
        """Test that a (seed, stream) pair always gives the same values."""
        a = RandomHelper.generator(7, stream=3).random(4)
        b = RandomHelper.generator(7, stream=3).random(4)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        """Test that distinct streams and seeds give distinct values."""
        base = RandomHelper.generator(7, stream=3).random(4)
        assert not np.array_equal(base, RandomHelper.generator(7, stream=4).random(4))
        assert not np.array_equal(base, RandomHelper.generator(8, stream=3).random(4))
        assert not np.array_equal(base, RandomHelper.generator(7).random(4))

    def test_negative_seed(self):
        """Test that negative seeds raise."""
        with pytest.raises(SplurgeRangeError):
            RandomHelper.generator(-1)

    def test_uniform_block(self):
        """Test that a block matches its stream."""
        block = RandomHelper.uniform_block(5, 11, 6)
        np.testing.assert_array_equal(block, RandomHelper.generator(5, stream=11).random(6))
        assert block.min() >= 0.0
        assert block.max() < 1.0


class TestComplexUnit:
    """Test random unimodular values."""

    def test_modulus_one(self):
        """Test that every value lies on the unit circle."""
        values = RandomHelper.complex_unit((3, 2), rng=RandomHelper.generator(1))
        assert values.shape == (3, 2)
        np.testing.assert_allclose(np.abs(values), 1.0)


class TestRandomWalk:
    """Test admissible random walks."""

    def test_golden_mean_walks_are_admissible(self):
        """Test that walks never contain the forbidden block 11."""
        system = SymbolicHelper.validate(SystemSpec.constant([[1, 1], [1, 0]]))
        rng = RandomHelper.generator(2)
        for _ in range(20):
            walk = RandomHelper.random_walk(system, 0, 8, rng=rng)
            assert len(walk) == 8
            assert "11" not in "".join(map(str, walk))

    def test_after_symbol(self):
        """Test that a walk after symbol 1 starts with 0 on the golden mean shift."""
        system = SymbolicHelper.validate(SystemSpec.constant([[1, 1], [1, 0]]))
        rng = RandomHelper.generator(3)
        for _ in range(10):
            assert RandomHelper.random_walk(system, 2, 3, rng=rng, after=1)[0] == 0

    def test_empty_walk(self):
        """Test that a zero-length walk is empty."""
        system = SymbolicHelper.validate(SystemSpec.full_shift(2))
        assert RandomHelper.random_walk(system, 0, 0, rng=RandomHelper.generator(0)) == ()
