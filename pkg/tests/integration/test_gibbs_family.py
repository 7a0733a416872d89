"""
Integration tests for the sequential Gibbs family.

Solves the RPF problem on several systems and checks the resulting measures, the Markov
identification, the martingale-coboundary decomposition and the exact laws of Birkhoff sums.
"""

import numpy as np
import pytest

from splurge_gibbs.decomp import DecompositionHelper
from splurge_gibbs.dist import DistributionHelper
from splurge_gibbs.models import ModelHelper, ModelZoo
from splurge_gibbs.symbolic import SymbolicHelper
from splurge_gibbs.transfer import TransferHelper

THREE_STATE = [
    [[0.5, 0.3, 0.2], [0.1, 0.6, 0.3], [0.25, 0.25, 0.5]],
    [[0.2, 0.2, 0.6], [0.4, 0.4, 0.2], [0.3, 0.5, 0.2]],
]


def _three_state():
    return ModelHelper.from_markov_chain(THREE_STATE, (0.2, 0.3, 0.5), name="three_state")


def _build(name: str):
    return _three_state() if name == "three_state" else ModelZoo.build(name)


@pytest.mark.parametrize("name", ["coin", "golden_parry", "doubling", "three_state"])
class TestRpfAcceptance:
    """Test the RPF solve on systems with known structure."""

    @pytest.fixture(autouse=True)
    def setup_method(self, name):
        """Solve the named system."""
        self.model = _build(name)
        self.rpf = self.model.solve(horizon=24)
        yield

    def test_contraction_and_tail(self):
        """Test the measured contraction and the tail estimate."""
        assert self.rpf.contraction < 0.9
        assert self.rpf.tail_error <= 1e-9

    def test_normalized_operator_fixes_one(self):
        """Test that the normalized operator maps 1 to 1 everywhere in the window."""
        assert TransferHelper.unit_residual(self.rpf) <= 1e-9

    def test_duality(self):
        """Test duality for indicator pairs at several indices."""
        space = self.model.space
        for j in (0, 5, 11):
            f = space.indicator(j + 1, "0")
            g = space.first_symbol(j, depth=2)
            assert TransferHelper.duality_residual(self.rpf, j, f, g) <= 1e-9

    def test_gibbs_sandwich(self):
        """Test that the Gibbs ratio stays inside [1/50, 50] on cylinders up to length six."""
        for length in range(1, 7):
            for word in SymbolicHelper.enumerate_words(self.model.system, 3, length):
                assert 1 / 50 <= TransferHelper.gibbs_sandwich(self.rpf, word) <= 50


class TestMarkovIdentification:
    """Test that Gibbs measures of log-transition potentials are Markov path laws."""

    def test_periodic_three_state_chain(self):
        """Test cylinders up to length five at even and odd indices."""
        model = _three_state()
        rpf = model.solve(horizon=16)
        residual = ModelHelper.markov_identification_residual(model, rpf, max_length=5, indices=(0, 1, 2, 3))
        assert residual <= 1e-12


class TestDecompositionAcceptance:
    """Test the martingale-coboundary decomposition on several observables."""

    @pytest.mark.parametrize("name", ["markov", "linear:1,0.5", "irr_sqrt2", "golden_parry"])
    def test_identities(self, name):
        """Test the identity and martingale residuals."""
        model = ModelZoo.build(name)
        rpf = model.solve(horizon=48)
        centered = DecompositionHelper.center(rpf, model.observable)
        result = DecompositionHelper.martingale_coboundary(rpf, centered.sequence, count=40)
        assert result.identity_residual.max() <= 1e-9
        assert result.martingale_residual.max() <= 1e-8

    def test_coin_variance_is_n_over_four(self):
        """Test that the coin variance grows like n / 4."""
        model = ModelZoo.build("coin")
        rpf = model.solve(horizon=130)
        report = DecompositionHelper.classify_variance(rpf, model.observable)
        assert report.verdict.value == "Growing"
        np.testing.assert_allclose(report.variance, np.asarray(report.n_grid) / 4.0, rtol=1e-9)

    def test_coboundary_is_bounded(self):
        """Test that a coboundary observable has bounded variance."""
        model = ModelZoo.build("coboundary")
        rpf = model.solve(horizon=130)
        assert DecompositionHelper.classify_variance(rpf, model.observable).verdict.value == "Bounded"


class TestExactLaws:
    """Test exact laws of Birkhoff sums."""

    def test_atomic_law_matches_lattice_pmf_on_markov(self):
        """Test the forward-propagation oracle against the inverse DFT."""
        model = ModelZoo.build("markov")
        rpf = model.solve(horizon=12)
        lattice = DistributionHelper.lattice_pmf(rpf, model.observable, 3)
        atomic = DistributionHelper.atomic_law(rpf, model.observable, 3)
        np.testing.assert_allclose(atomic.atoms, lattice.atoms)
        np.testing.assert_allclose(atomic.masses, lattice.masses, atol=1e-12)

    def test_markov_path_law(self):
        """Test P(S_2 = 2) = P(x_0 = 1, x_1 = 1)."""
        model = ModelZoo.build("markov")
        rpf = model.solve(horizon=12)
        law = DistributionHelper.lattice_pmf(rpf, model.observable, 2)
        assert law.mass(2) == pytest.approx(0.5 * 0.6, abs=1e-12)
        assert law.mass(0) == pytest.approx(0.5 * 0.7, abs=1e-12)
