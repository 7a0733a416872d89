"""
Tests for the dist module.
"""

import math

import numpy as np
import pytest
from scipy import stats

from splurge_gibbs.decomp import DecompositionHelper
from splurge_gibbs.dist import DiscreteLaw, DistributionHelper, FejerKernel, LatticeLaw
from splurge_gibbs.exceptions import (
    SplurgeNotIntegerValuedError,
    SplurgeParameterError,
    SplurgeRangeError,
    SplurgeRangeOverflowError,
)
from splurge_gibbs.models import ModelZoo


@pytest.fixture(scope="module")
def coin():
    model = ModelZoo.build("coin")
    return model, model.solve(horizon=40)


class TestFejerKernel:
    """Test the smoothing kernel."""

    def test_values(self):
        """Test the peak value and the tent transform."""
        kernel = FejerKernel(8.0)
        assert float(kernel(0.0)) == pytest.approx(8.0 / (2 * math.pi))
        assert float(kernel.transform(0.0)) == 1.0
        assert float(kernel.transform(4.0)) == 0.5
        assert float(kernel.transform(9.0)) == 0.0

    def test_zeros(self):
        """Test that the kernel vanishes at multiples of 2 pi / T0."""
        kernel = FejerKernel(4.0)
        assert float(kernel(2 * math.pi / 4.0)) == pytest.approx(0.0, abs=1e-15)

    def test_positive_t0(self):
        """Test that T0 must be positive."""
        with pytest.raises(SplurgeRangeError):
            FejerKernel(0.0)


class TestCharFn:
    """Test characteristic functions."""

    def test_coin_value(self, coin):
        """Test Phi_2(pi / 2) on the fair coin."""
        model, rpf = coin
        value = DistributionHelper.char_fn(rpf, model.observable, 2, math.pi / 2)
        assert value == pytest.approx(0.5j, abs=1e-12)

    def test_zero_steps(self, coin):
        """Test that Phi_0 is identically one."""
        model, rpf = coin
        values = DistributionHelper.char_fn_values(rpf, model.observable, 0, [0.0, 1.0, 2.0])
        np.testing.assert_allclose(values, 1.0, atol=1e-12)

    def test_closed_form(self, coin):
        """Test the curve against ((1 + e^{it}) / 2)^n."""
        model, rpf = coin
        ts = np.linspace(-math.pi, math.pi, 11)
        curve = DistributionHelper.char_fn_curve(rpf, model.observable, 10, ts)
        np.testing.assert_allclose(curve.values, ((1 + np.exp(1j * ts)) / 2) ** 10, atol=1e-12)
        assert curve.density == "1"
        assert len(curve.to_rows()) == 11

    def test_chunking(self, coin):
        """Test that frequency chunking gives identical values."""
        model, rpf = coin
        ts = np.linspace(0.0, 3.0, 7)
        whole = DistributionHelper.char_fn_values(rpf, model.observable, 5, ts)
        split = DistributionHelper.char_fn_values(rpf, model.observable, 5, ts, t_chunk=3)
        np.testing.assert_array_equal(whole, split)

    def test_beyond_horizon(self, coin):
        """Test that n above the horizon raises."""
        model, rpf = coin
        with pytest.raises(SplurgeParameterError):
            DistributionHelper.char_fn(rpf, model.observable, rpf.horizon + 1, 1.0)


class TestLatticePmf:
    """Test inverse-DFT lattice laws."""

    def test_coin_binomial(self, coin):
        """Test that the coin sum is binomial."""
        model, rpf = coin
        law = DistributionHelper.lattice_pmf(rpf, model.observable, 4)
        assert law.support_min == 0
        np.testing.assert_allclose(law.masses, stats.binom.pmf(np.arange(5), 4, 0.5), atol=1e-12)
        assert law.mass(2) == pytest.approx(0.375)
        assert law.mass(7) == 0.0

    def test_scaled_support(self):
        """Test the support of twice the coin."""
        model = ModelZoo.build("two_coin")
        rpf = model.solve(horizon=8)
        law = DistributionHelper.lattice_pmf(rpf, model.observable, 3)
        assert law.atoms.tolist() == list(range(7))
        assert law.mass(1) == pytest.approx(0.0, abs=1e-12)
        assert law.mass(2) == pytest.approx(3 / 8)

    def test_not_integer_valued(self, coin):
        """Test that fractional observables raise."""
        model, rpf = coin
        with pytest.raises(SplurgeNotIntegerValuedError):
            DistributionHelper.lattice_pmf(rpf, model.space.named_sequence("scaled:0.5"), 4)

    def test_range_overflow(self, coin, monkeypatch):
        """Test that ranges above the cap raise."""
        model, rpf = coin
        monkeypatch.setattr(DistributionHelper, "MAX_RANGE", 4)
        with pytest.raises(SplurgeRangeOverflowError):
            DistributionHelper.integer_range(model.observable, 8)


class TestLatticePmfConsistency:
    """Test lattice laws of a correlated chain against the transfer-operator quantities."""

    @pytest.fixture(autouse=True)
    def setup_method(self):
        """Solve the default Markov chain and take the law of S_32."""
        self.model = ModelZoo.build("markov")
        self.rpf = self.model.solve(horizon=40)
        self.n = 32
        self.law = DistributionHelper.lattice_pmf(self.rpf, self.model.observable, self.n)
        yield

    def test_fourier_round_trip(self):
        """Test that sum_u P(S_n = u) e^{itu} reproduces Phi_n(t)."""
        ts = np.array([0.0, 0.3, 1.0, 2.5, math.pi, 5.0])
        expected = DistributionHelper.char_fn_values(self.rpf, self.model.observable, self.n, ts)
        rebuilt = np.exp(1j * np.outer(ts, self.law.atoms)) @ self.law.masses
        np.testing.assert_allclose(rebuilt, expected, rtol=0.0, atol=1e-9)

    def test_moments_match_exact_moments(self):
        """Test that the PMF mean and variance agree with the pushed-forward moments."""
        mean, variance, _ = DecompositionHelper.sum_moments(self.rpf, self.model.observable, self.n)
        assert self.law.total == pytest.approx(1.0, abs=1e-10)
        assert self.law.mean == pytest.approx(mean, rel=1e-8, abs=1e-8)
        assert self.law.variance == pytest.approx(variance, rel=1e-8, abs=1e-8)


class TestSmoothedDensity:
    """Test Fejer-smoothed densities."""

    def test_zero_observable(self, coin):
        """Test that the zero observable gives the kernel peak at u = 0."""
        model, rpf = coin
        zero = model.space.named_sequence("zero")
        values = DistributionHelper.smoothed_density(rpf, zero, 4, [0.0], t0=8.0)
        assert values[0] == pytest.approx(8.0 / (2 * math.pi), rel=1e-9)

    def test_matches_kernel_average(self, coin):
        """Test the coin density against the kernel averaged over the binomial law."""
        model, rpf = coin
        kernel = FejerKernel(4.0)
        us = np.array([-0.5, 1.0, 2.3])
        values = DistributionHelper.smoothed_density(rpf, model.observable, 4, us, t0=4.0)
        masses = stats.binom.pmf(np.arange(5), 4, 0.5)
        expected = [float((masses * kernel(np.arange(5) - u)).sum()) for u in us]
        np.testing.assert_allclose(values, expected, atol=1e-6)

    def test_quadrature_step(self, coin):
        """Test the step rule min(0.01, pi / (4 R))."""
        model, _ = coin
        assert DistributionHelper.quadrature_step(model.observable, 4, np.array([0.0])) == 0.01
        step = DistributionHelper.quadrature_step(model.observable, 100, np.array([100.0]))
        assert step == pytest.approx(math.pi / 800)


class TestAtomicLaw:
    """Test the forward-propagation oracle."""

    def test_coin_binomial(self, coin):
        """Test that the oracle reproduces the binomial law."""
        model, rpf = coin
        law = DistributionHelper.atomic_law(rpf, model.observable, 6)
        np.testing.assert_allclose(law.atoms, np.arange(7))
        np.testing.assert_allclose(law.masses, stats.binom.pmf(np.arange(7), 6, 0.5), atol=1e-12)

    def test_irrational_atoms(self):
        """Test mass and mean of a non-lattice observable."""
        model = ModelZoo.build("irr_sqrt2")
        rpf = model.solve(horizon=10)
        law = DistributionHelper.atomic_law(rpf, model.observable, 5)
        assert law.total == pytest.approx(1.0)
        assert law.mean == pytest.approx(5 * (0.5 + math.sqrt(2.0) / 4))

    def test_atom_cap(self, coin):
        """Test that too many atoms raise."""
        model, rpf = coin
        with pytest.raises(SplurgeRangeOverflowError):
            DistributionHelper.atomic_law(rpf, model.observable, 6, max_atoms=2)

    def test_parameter_checks(self, coin):
        """Test the range and depth checks."""
        model, rpf = coin
        with pytest.raises(SplurgeParameterError):
            DistributionHelper.atomic_law(rpf, model.observable, 0)
        with pytest.raises(SplurgeParameterError):
            DistributionHelper.atomic_law(rpf, model.space.named_sequence("indicator:010"), 3)


class TestDiscreteLaw:
    """Test the law value types."""

    def test_moments_and_cdf(self):
        """Test moments and the right-continuous cdf."""
        law = DiscreteLaw(atoms=np.array([0.0, 1.0, 3.0]), masses=np.array([0.25, 0.5, 0.25]))
        assert law.mean == pytest.approx(1.25)
        assert law.variance == pytest.approx(0.25 * 1.5625 + 0.5 * 0.0625 + 0.25 * 3.0625)
        np.testing.assert_allclose(law.cdf([-1.0, 0.0, 2.0, 3.0]), [0.0, 0.25, 0.75, 1.0])
        assert law.expect(lambda x: x**2) == pytest.approx(2.75)
        assert law.to_rows()[1] == {"u": 1.0, "mass": 0.5}

    def test_lattice_law(self):
        """Test building a lattice law from masses."""
        law = LatticeLaw.from_masses(-2, np.array([0.5, 0.5]))
        assert law.atoms.tolist() == [-2.0, -1.0]
        assert law.mass(-1) == 0.5

    def test_summary(self):
        """Test the JSON summary."""
        law = LatticeLaw.from_masses(0, np.array([0.5, 0.5]))
        summary = DistributionHelper.law_summary(law)
        assert summary == {"atoms": 2, "total": 1.0, "mean": 0.5, "variance": 0.25, "third_central": 0.0}
