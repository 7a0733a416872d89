"""
Tests for the funcspace module.
"""

import math

import numpy as np
import pytest

from splurge_gibbs.exceptions import (
    SplurgeBaseMismatchError,
    SplurgeDepthOverflowError,
    SplurgeIndexOutOfWindowError,
    SplurgeInadmissibleError,
    SplurgeParameterError,
    SplurgeRangeError,
    SplurgeShapeMismatchError,
)
from splurge_gibbs.funcspace import FunctionSpace
from splurge_gibbs.symbolic import SymbolicHelper, SystemSpec, Word


@pytest.fixture
def coin_space() -> FunctionSpace:
    return FunctionSpace(SymbolicHelper.validate(SystemSpec.full_shift(2)))


@pytest.fixture
def golden_space() -> FunctionSpace:
    return FunctionSpace(SymbolicHelper.validate(SystemSpec.constant([[1, 1], [1, 0]])))


class TestConstruction:
    """Test building finite-depth functions."""

    def test_from_values(self, coin_space):
        """Test that the table rank sets the depth."""
        f = coin_space.from_values(0, [[0.0, 1.0], [2.0, 3.0]])
        assert f.depth == 2
        assert f(Word.from_string(0, "10")) == 2.0
        assert f(Word.from_string(0, "101")) == 2.0

    def test_inadmissible_entries_are_zeroed(self, golden_space):
        """Test that values on forbidden words are dropped."""
        f = golden_space.from_values(0, [[1.0, 1.0], [1.0, 9.0]])
        assert f.values[1, 1] == 0.0
        assert f.sup_norm() == 1.0
        with pytest.raises(SplurgeInadmissibleError):
            f(Word.from_string(0, "11"))

    def test_call_checks_base_and_length(self, coin_space):
        """Test base and length checks on evaluation."""
        f = coin_space.constant(3, 1.5, depth=2)
        with pytest.raises(SplurgeBaseMismatchError):
            f(Word.from_string(0, "00"))
        with pytest.raises(SplurgeParameterError):
            f(Word.from_string(3, "0"))

    def test_first_symbol(self, golden_space):
        """Test the first-symbol observable at depth two."""
        f = golden_space.first_symbol(0, depth=2)
        assert f.table() == {"00": 0.0, "01": 0.0, "10": 1.0}

    def test_indicator(self, golden_space):
        """Test cylinder indicators, admissible or not."""
        f = golden_space.indicator(0, "01")
        assert f.table() == {"00": 0.0, "01": 1.0, "10": 0.0}
        empty = golden_space.indicator(0, "11")
        assert empty.sup_norm() == 0.0
        with pytest.raises(SplurgeBaseMismatchError):
            golden_space.indicator(0, Word.from_string(1, "0"))

    def test_linear(self, coin_space):
        """Test a linear combination of coordinates."""
        f = coin_space.linear(0, [1.0, 2.0])
        assert f.table() == {"00": 0.0, "01": 2.0, "10": 1.0, "11": 3.0}

    def test_from_table(self, golden_space):
        """Test building from a word-keyed table."""
        f = golden_space.from_table(0, {"00": 0.1, "01": 0.2, "10": 0.3})
        assert f(Word.from_string(0, "10")) == pytest.approx(0.3)

    def test_from_table_errors(self, golden_space):
        """Test mixed key lengths, forbidden keys and missing words."""
        with pytest.raises(SplurgeParameterError):
            golden_space.from_table(0, {"0": 1.0, "01": 1.0})
        with pytest.raises(SplurgeInadmissibleError):
            golden_space.from_table(0, {"00": 0.0, "01": 0.0, "10": 0.0, "11": 1.0})
        with pytest.raises(SplurgeParameterError):
            golden_space.from_table(0, {"00": 1.0})

    def test_depth_cap(self, coin_space):
        """Test that depths above the cap raise."""
        assert coin_space.check_depth(12) == 12
        with pytest.raises(SplurgeDepthOverflowError):
            coin_space.check_depth(13)
        with pytest.raises(SplurgeRangeError):
            coin_space.check_depth(0)


class TestAlgebra:
    """Test pointwise algebra and depth handling."""

    def test_embed_keeps_values(self, golden_space):
        """Test that embedding into a larger depth keeps every value."""
        f = golden_space.first_symbol(0)
        g = golden_space.embed(f, 3)
        assert g.depth == 3
        for word, value in g.table().items():
            assert value == float(word[0])

    def test_compose_shift(self, coin_space):
        """Test that f composed with the shift reads the second coordinate."""
        f = coin_space.first_symbol(1)
        g = coin_space.compose_shift(f)
        assert g.base == 0
        assert g.table() == {"00": 0.0, "01": 1.0, "10": 0.0, "11": 1.0}

    def test_add_and_mul_align_depths(self, coin_space):
        """Test that operands of different depths are aligned."""
        f = coin_space.first_symbol(0)
        g = coin_space.linear(0, [0.0, 1.0])
        assert coin_space.add(f, g).table() == {"00": 0.0, "01": 1.0, "10": 1.0, "11": 2.0}
        assert coin_space.mul(f, g).table() == {"00": 0.0, "01": 0.0, "10": 0.0, "11": 1.0}

    def test_base_mismatch(self, coin_space):
        """Test that operands at different bases raise."""
        with pytest.raises(SplurgeBaseMismatchError):
            coin_space.add(coin_space.constant(0, 1.0), coin_space.constant(1, 1.0))

    def test_exp_scaled(self, coin_space):
        """Test that e^{i pi x_0} takes the values 1 and -1."""
        f = coin_space.exp_scaled(coin_space.first_symbol(0), math.pi)
        assert f.is_complex
        np.testing.assert_allclose(f.values, [1.0, -1.0], atol=1e-15)


class TestNorms:
    """Test the Hoelder seminorm and the star norm."""

    def test_holder_seminorm_example(self, coin_space):
        """Test the seminorm of the indicator-like table."""
        f = coin_space.from_values(0, [[0.0, 1.0], [0.0, 0.0]])
        assert coin_space.holder_seminorm(f, 1.0) == pytest.approx(2.0)

    def test_star_norm_example(self, coin_space):
        """Test the star norm with C1 = 1."""
        f = coin_space.from_values(0, [[0.0, 1.0], [0.0, 0.0]])
        assert coin_space.star_norm(f, 1.0, 1.0) == pytest.approx(1.0)

    def test_holder_of_constant_is_zero(self, golden_space):
        """Test that constants have zero seminorm."""
        assert golden_space.holder_seminorm(golden_space.constant(0, 4.0, depth=3)) == 0.0

    def test_holder_complex(self, coin_space):
        """Test the seminorm of a complex function."""
        f = coin_space.exp_scaled(coin_space.first_symbol(0), math.pi)
        assert coin_space.holder_seminorm(f, 1.0) == pytest.approx(2.0)

    def test_norm_parameter_errors(self, coin_space):
        """Test out-of-range alpha and C1."""
        f = coin_space.first_symbol(0)
        with pytest.raises(SplurgeRangeError):
            coin_space.holder_seminorm(f, 0.0)
        with pytest.raises(SplurgeRangeError):
            coin_space.holder_seminorm(f, 1.5)
        with pytest.raises(SplurgeRangeError):
            coin_space.star_norm(f, 1.0, 0.0)


class TestFunctionals:
    """Test functionals and pairing."""

    def test_uniform_functional(self, golden_space):
        """Test the uniform weights on admissible words."""
        functional = golden_space.uniform_functional(0, 2)
        assert functional.is_probability()
        assert golden_space.pair(functional, golden_space.first_symbol(0)) == pytest.approx(1 / 3)

    def test_marginal(self, golden_space):
        """Test restriction to a smaller depth."""
        marginal = golden_space.uniform_functional(0, 2).marginal(1)
        np.testing.assert_allclose(marginal.weights, [2 / 3, 1 / 3])
        with pytest.raises(SplurgeRangeError):
            golden_space.uniform_functional(0, 2).marginal(3)

    def test_pair_errors(self, coin_space):
        """Test pairing with mismatched bases or a deeper function."""
        functional = coin_space.uniform_functional(0, 1)
        with pytest.raises(SplurgeBaseMismatchError):
            coin_space.pair(functional, coin_space.constant(1, 1.0))
        with pytest.raises(SplurgeParameterError):
            coin_space.pair(functional, coin_space.constant(0, 1.0, depth=2))


class TestFunctionSequence:
    """Test index-dependent sequences."""

    def test_named_sequences(self, coin_space):
        """Test the observable literals."""
        assert coin_space.named_sequence("first_symbol")[5].table() == {"0": 0.0, "1": 1.0}
        assert coin_space.named_sequence("constant:2.5")[0].sup_norm() == 2.5
        assert coin_space.named_sequence("scaled:2")[0].table() == {"0": 0.0, "1": 2.0}
        assert coin_space.named_sequence("indicator:01").depth == 2
        assert coin_space.named_sequence("linear:1,1").value_range(3) == (0.0, 2.0)
        assert coin_space.named_sequence({"0": 0.25, "1": 0.75})[2].table() == {"0": 0.25, "1": 0.75}

    def test_named_sequence_errors(self, coin_space):
        """Test unknown and malformed literals."""
        with pytest.raises(SplurgeParameterError):
            coin_space.named_sequence("cosine")
        with pytest.raises(SplurgeParameterError):
            coin_space.named_sequence("constant:abc")

    def test_index_range(self, coin_space):
        """Test access outside a declared index range."""
        seq = coin_space.sequence(lambda j: np.full(2, float(j)), depth=1, index_range=(0, 4))
        assert seq[3].sup_norm() == 3.0
        with pytest.raises(SplurgeIndexOutOfWindowError):
            seq.native(4)

    def test_builder_shape(self, coin_space):
        """Test that a builder returning the wrong shape raises."""
        seq = coin_space.sequence(lambda j: np.zeros(3), depth=1)
        with pytest.raises(SplurgeShapeMismatchError):
            seq.native(0)

    def test_integer_valued(self, coin_space):
        """Test the integer-valued check."""
        assert coin_space.named_sequence("first_symbol").is_integer_valued(range(5))
        assert not coin_space.named_sequence("scaled:0.5").is_integer_valued(range(5))

    def test_values_embeds(self, golden_space):
        """Test that values at a larger depth broadcast the native tensor."""
        seq = golden_space.named_sequence("first_symbol")
        assert seq.values(0, 2).tolist() == [[0.0, 0.0], [1.0, 0.0]]

    def test_map(self, coin_space):
        """Test mapping a sequence index by index."""
        seq = coin_space.named_sequence("first_symbol").map(lambda j, v: v + j, name="shifted")
        assert seq.name == "shifted"
        assert seq[2].table() == {"0": 2.0, "1": 3.0}
