"""
Tests for the models module.

Covers Markov chains, linear statistics, matrix cocycles, interval maps, the one-sided
reduction of two-sided potentials and the named zoo.
"""

import json

import numpy as np
import pytest

from splurge_gibbs.exceptions import (
    SplurgeDepthOverflowError,
    SplurgeIncompatibleReferencePastError,
    SplurgeNotEllipticError,
    SplurgeNotExpandingError,
    SplurgeNotMarkovError,
    SplurgeNotPositiveError,
    SplurgeNotStochasticError,
    SplurgeParameterError,
    SplurgeShapeMismatchError,
)
from splurge_gibbs.funcspace import FunctionSpace
from splurge_gibbs.models import IntervalMap, ModelHelper, ModelZoo, TwoSidedFn
from splurge_gibbs.symbolic import SymbolicHelper, SystemSpec, Word
from splurge_gibbs.transfer import TransferHelper

TRANSITION = [[0.7, 0.3], [0.4, 0.6]]


class TestMarkovChain:
    """Test Markov chain models."""

    @pytest.fixture(autouse=True)
    def setup_method(self):
        """Build the default two-state chain and solve it."""
        self.model = ModelHelper.from_markov_chain([TRANSITION], (0.5, 0.5))
        self.rpf = self.model.solve(horizon=12)
        yield

    def test_path_probability(self):
        """Test chain probabilities of short paths."""
        chain = self.model.chain
        assert chain.path_probability(Word.from_string(0, "01")) == pytest.approx(0.15)
        np.testing.assert_allclose(chain.marginal(1), [0.55, 0.45])

    def test_gibbs_measure_is_the_chain(self):
        """Test that Gibbs cylinders match path probabilities."""
        assert TransferHelper.gibbs_cylinder(self.rpf, Word.from_string(0, "01")) == pytest.approx(0.15, abs=1e-12)
        assert ModelHelper.markov_identification_residual(self.model, self.rpf) <= 1e-12

    def test_normalized_potential(self):
        """Test that the normalized potential gives lambda = 1 and h = 1."""
        np.testing.assert_allclose(self.rpf.lambdas, 1.0, atol=1e-12)
        np.testing.assert_allclose(self.rpf.h(3).admissible_values(), 1.0, atol=1e-12)
        assert self.model.metadata["ellipticity_step"] == 0

    def test_negative_marginal(self):
        """Test that marginals left of the initial index raise."""
        with pytest.raises(SplurgeParameterError):
            self.model.chain.marginal(-1)

    def test_identification_needs_chain(self):
        """Test that models without a chain raise."""
        coin = ModelZoo.build("coin")
        with pytest.raises(SplurgeParameterError):
            ModelHelper.markov_identification_residual(coin, coin.solve(horizon=8))


class TestMarkovChainErrors:
    """Test the validation of chain inputs."""

    def test_not_stochastic(self):
        """Test a row that does not sum to one."""
        with pytest.raises(SplurgeNotStochasticError):
            ModelHelper.from_markov_chain([[[0.5, 0.4], [0.5, 0.5]]], (0.5, 0.5))

    def test_empty(self):
        """Test an empty transition list."""
        with pytest.raises(SplurgeNotStochasticError):
            ModelHelper.from_markov_chain([], (0.5, 0.5))

    def test_bad_initial(self):
        """Test an initial law that does not sum to one."""
        with pytest.raises(SplurgeNotStochasticError):
            ModelHelper.from_markov_chain([TRANSITION], (0.5, 0.6))

    def test_small_entry(self):
        """Test a positive entry below epsilon."""
        with pytest.raises(SplurgeNotEllipticError):
            ModelHelper.from_markov_chain([[[0.9999, 0.0001], [0.5, 0.5]]], (0.5, 0.5))

    def test_periodic_chain(self):
        """Test that a permutation chain is never elliptic."""
        with pytest.raises(SplurgeNotEllipticError):
            ModelHelper.from_markov_chain([[[0.0, 1.0], [1.0, 0.0]]], (0.5, 0.5))

    def test_initial_must_charge_every_symbol(self):
        """Test an initial law with a zero entry."""
        with pytest.raises(SplurgeNotEllipticError):
            ModelHelper.from_markov_chain([TRANSITION], (1.0, 0.0))


class TestLinearStatistic:
    """Test finite linear statistics."""

    @pytest.fixture(autouse=True)
    def setup_method(self):
        """Use the default chain."""
        self.model = ModelHelper.from_markov_chain([TRANSITION], (0.5, 0.5))
        yield

    def test_values_and_bound(self):
        """Test the value on a word and the truncation bound."""
        sequence, bound = ModelHelper.linear_statistic(self.model, [1.0, 0.5], tail_ratio=0.5)
        assert sequence.depth == 2
        assert sequence[4](Word.from_string(4, "11")) == pytest.approx(1.5)
        assert bound == pytest.approx(0.5)

    def test_no_bound_without_ratio(self):
        """Test that the bound is omitted without a tail ratio."""
        _, bound = ModelHelper.linear_statistic(self.model, [1.0])
        assert bound is None

    def test_errors(self):
        """Test empty coefficients, bad ratios and the depth cap."""
        with pytest.raises(SplurgeParameterError):
            ModelHelper.linear_statistic(self.model, [])
        with pytest.raises(SplurgeParameterError):
            ModelHelper.linear_statistic(self.model, [1.0], tail_ratio=1.0)
        with pytest.raises(SplurgeDepthOverflowError):
            ModelHelper.linear_statistic(self.model, [1.0] * 13)


class TestCocycle:
    """Test sequential Perron-Frobenius data of matrix products."""

    def test_scalar_case_is_exact(self):
        """Test that 1 x 1 matrices give their own values and no decay error."""
        data = ModelHelper.positive_matrix_cocycle([[[2.0]], [[3.0]]])
        np.testing.assert_allclose(data.lambdas[:4], [2.0, 3.0, 2.0, 3.0])
        assert data.decay_ratio == 0.0
        assert data.gap_constant == pytest.approx(0.0, abs=1e-9)
        assert data.to_dict()["pi"][0] == pytest.approx(np.log(2.0))

    def test_random_positive_matrices(self):
        """Test the eigen relations and exponential decay on positive 3 x 3 matrices."""
        rng = np.random.default_rng(7)
        mats = [rng.uniform(0.5, 2.0, size=(3, 3)) for _ in range(5)]
        data = ModelHelper.positive_matrix_cocycle(mats)
        assert data.decay_ratio < 1.0
        for j in range(5):
            np.testing.assert_allclose(mats[j] @ data.h[j], data.lambdas[j] * data.h[j + 1], atol=1e-10)
            assert data.h[j].sum() == pytest.approx(1.0)
            assert float(data.nu[j] @ data.h[j]) == pytest.approx(1.0)

    def test_errors(self):
        """Test non-positive entries and unchainable shapes."""
        with pytest.raises(SplurgeNotPositiveError):
            ModelHelper.positive_matrix_cocycle([[[1.0, 0.0], [1.0, 1.0]]])
        with pytest.raises(SplurgeShapeMismatchError):
            ModelHelper.positive_matrix_cocycle([np.ones((2, 2)), np.ones((3, 3))])
        with pytest.raises(SplurgeParameterError):
            ModelHelper.positive_matrix_cocycle([])

    def test_driven_observable(self):
        """Test the zoo cocycle and the driven observable checks."""
        model = ModelZoo.build("cocycle")
        assert model.observable.depth == ModelHelper.DEFAULT_COCYCLE_DEPTH
        assert model.metadata["truncation_error"] >= 0.0
        with pytest.raises(SplurgeParameterError):
            ModelHelper.driven_cocycle_observable(model.space, [np.ones((2, 2))] * 2, depth=1)
        with pytest.raises(SplurgeNotPositiveError):
            ModelHelper.driven_cocycle_observable(model.space, [np.zeros((2, 2))] * 2)


class TestIntervalMap:
    """Test piecewise-linear Markov maps."""

    def test_doubling_is_lebesgue(self):
        """Test that the doubling map gives Lebesgue measure on dyadic cylinders."""
        model = ModelZoo.build("doubling")
        rpf = model.solve(horizon=10)
        np.testing.assert_allclose(rpf.lambdas, 1.0, atol=1e-12)
        assert TransferHelper.gibbs_cylinder(rpf, Word.from_string(2, "01")) == pytest.approx(0.25)

    def test_three_branch_cell_masses(self):
        """Test that cylinder masses equal cell lengths."""
        model = ModelZoo.build("three_branch")
        rpf = model.solve(horizon=10)
        assert TransferHelper.gibbs_cylinder(rpf, Word.from_string(3, "0")) == pytest.approx(0.5, abs=1e-9)
        assert TransferHelper.gibbs_cylinder(rpf, Word.from_string(3, "2")) == pytest.approx(0.25, abs=1e-9)

    def test_not_expanding(self):
        """Test that a slope of one raises."""
        interval_map = IntervalMap.from_dict({"breakpoints": [[0, 0.5, 1]] * 2, "images": [[[0, 0.5], [0.5, 1]]]})
        with pytest.raises(SplurgeNotExpandingError):
            ModelHelper.pw_linear_markov_map(interval_map)

    def test_not_markov(self):
        """Test that an image ending between breakpoints raises."""
        interval_map = IntervalMap.from_dict({"breakpoints": [[0, 0.5, 1]] * 2, "images": [[[0, 0.7], [0, 1]]]})
        with pytest.raises(SplurgeNotMarkovError):
            ModelHelper.pw_linear_markov_map(interval_map)

    def test_bad_partition(self):
        """Test that a partition must increase from 0 to 1."""
        interval_map = IntervalMap.from_dict({"breakpoints": [[0, 0.6, 0.5, 1]] * 2, "images": [[[0, 1]] * 3]})
        with pytest.raises(SplurgeParameterError):
            ModelHelper.pw_linear_markov_map(interval_map)


class TestSinaiReduction:
    """Test the reduction of two-sided potentials."""

    @pytest.fixture(autouse=True)
    def setup_method(self):
        """Reduce x_{j-1} x_j on the full two-shift."""
        self.space = FunctionSpace(SymbolicHelper.validate(SystemSpec.full_shift(2)))
        self.psi = TwoSidedFn(
            self.space.system,
            lambda j: np.outer(np.arange(2.0), np.arange(2.0)),
            past=1,
            future=0,
        )
        yield

    def test_identity_and_values(self):
        """Test the cohomology identity and the reduced potential x_j x_{j+1}."""
        reduction = ModelHelper.sinai_reduce(self.space, self.psi)
        assert reduction.reference == (0,)
        assert reduction.identity_residual(range(4)) == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(reduction.phi.native(0), [[0.0, 0.0], [0.0, 1.0]])

    def test_incompatible_reference(self):
        """Test a reference past that cannot precede every symbol."""
        space = FunctionSpace(SymbolicHelper.validate(SystemSpec.constant([[1, 1], [1, 0]])))
        psi = TwoSidedFn(space.system, lambda j: np.zeros((2, 2)), past=1, future=0)
        with pytest.raises(SplurgeIncompatibleReferencePastError):
            ModelHelper.sinai_reduce(space, psi, reference_past=(1,))
        with pytest.raises(SplurgeIncompatibleReferencePastError):
            ModelHelper.sinai_reduce(space, psi, reference_past=())
        assert ModelHelper.default_reference_past(space.system) == (0,)

    def test_two_sided_checks(self):
        """Test negative depths and builder shapes."""
        with pytest.raises(SplurgeParameterError):
            TwoSidedFn(self.space.system, lambda j: np.zeros(2), past=-1, future=0)
        bad = TwoSidedFn(self.space.system, lambda j: np.zeros(3), past=0, future=0)
        with pytest.raises(SplurgeShapeMismatchError):
            bad.values(0)


class TestModelZoo:
    """Test the named models."""

    @pytest.mark.parametrize(
        "name",
        [
            "coin",
            "two_coin",
            "iid:0.3",
            "markov",
            "golden_parry",
            "doubling",
            "three_branch",
            "cocycle",
            "irr_sqrt2",
            "red_fixture",
            "coboundary",
            "mixed",
            "sinai_prev",
            "linear:1,0.5",
            "vanishing",
        ],
    )
    def test_builds(self, name):
        """Test that every named model builds with its requested name."""
        model = ModelZoo.build(name)
        assert model.name == name
        assert model.working_depth >= 2

    def test_unknown_name(self):
        """Test that unknown names raise with the known list."""
        with pytest.raises(SplurgeParameterError) as exc_info:
            ModelZoo.build("tent")
        assert "coin" in exc_info.value.details

    def test_malformed_arguments(self):
        """Test malformed arguments of parameterised names."""
        with pytest.raises(SplurgeParameterError):
            ModelZoo.build("iid:abc")
        with pytest.raises(SplurgeParameterError):
            ModelZoo.build("linear:1,x")
        with pytest.raises(SplurgeParameterError):
            ModelZoo.build("red_fixture:c")
        with pytest.raises(SplurgeNotEllipticError):
            ModelZoo.build("iid:0")

    def test_markov_file(self, tmp_path):
        """Test a chain read from a JSON document relative to a base directory."""
        document = {"transitions": [TRANSITION, [[0.5, 0.5], [0.2, 0.8]]], "initial": [0.25, 0.75]}
        (tmp_path / "chain.json").write_text(json.dumps(document))
        model = ModelZoo.build("markov:chain.json", base_dir=tmp_path)
        assert model.system.extension.period == 2
        assert model.chain.path_probability(Word.from_string(0, "1")) == pytest.approx(0.75)

    def test_red_fixture_parameters(self):
        """Test the reducible fixture parameters and the dropped decomposition."""
        model = ModelZoo.build("red_fixture:c=0.25,g=0.1")
        assert model.decomposition is not None
        assert model.metadata["c"] == 0.25
        other = model.with_observable(model.space.named_sequence("first_symbol"))
        assert other.decomposition is None

    def test_names_listed(self):
        """Test that the listing includes the file-based variants."""
        assert "markov:<file>" in ModelZoo.names()
        assert "red_fixture" in ModelZoo.names()
