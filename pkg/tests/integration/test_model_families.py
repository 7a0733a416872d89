"""
Integration tests for matrix cocycles and the reduction of two-sided potentials.
"""

import math

import numpy as np
import pytest

from splurge_gibbs.decomp import DecompositionHelper
from splurge_gibbs.models import ModelHelper, ModelZoo, TwoSidedFn


class TestMatrixCocycles:
    """Test sequential Perron-Frobenius data of positive matrix products."""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_products_contract(self, seed):
        """Test decay and bounded gap for random 3 x 3 products with entries in [0.5, 2]."""
        rng = np.random.default_rng(seed)
        mats = [rng.uniform(0.5, 2.0, size=(3, 3)) for _ in range(7)]
        data = ModelHelper.positive_matrix_cocycle(mats)
        assert data.decay_ratio < 1.0
        assert data.decay_distances[-1] < data.decay_distances[0]
        assert math.isfinite(data.gap_constant)
        for j in range(7):
            np.testing.assert_allclose(data.nu[j + 1] @ mats[j], data.lambdas[j] * data.nu[j], rtol=1e-8)

    def test_rectangular_chain(self):
        """Test products of matrices of alternating shapes."""
        mats = [np.full((2, 3), 1.0) + np.eye(2, 3), np.full((3, 2), 1.0) + np.eye(3, 2)]
        data = ModelHelper.positive_matrix_cocycle(mats)
        assert data.h[0].shape == (3,)
        assert data.h[1].shape == (2,)
        assert data.decay_ratio < 1.0

    def test_driven_cocycle_growth(self):
        """Test that the driven observable sums to the log norm of the product up to a bounded error."""
        model = ModelZoo.build("cocycle")
        mats = [np.asarray(b, dtype=np.float64) for b in ModelZoo.DEFAULT_COCYCLE]
        depth = model.observable.depth
        rng = np.random.default_rng(4)
        gaps = []
        for n in (20, 80):
            path = rng.integers(0, 2, size=n + depth - 1)
            total = sum(
                float(model.observable.native(j)[tuple(int(s) for s in path[j : j + depth])]) for j in range(n)
            )
            product = np.eye(2)
            for s in path[: n + depth - 1]:
                product = mats[int(s)] @ product
            exact = math.log(float(np.ones(2) @ product @ np.ones(2)))
            gaps.append(abs(total - exact) / n)
        assert gaps[1] <= 0.1 + model.metadata["truncation_error"]


class TestSinaiReduction:
    """Test the cohomology of two-sided and one-sided potentials."""

    @pytest.fixture(autouse=True)
    def setup_method(self):
        """Reduce psi_j = x_{j-1} + x_{j-1} x_j + x_j / 2 on the fair coin."""
        self.model = ModelZoo.build("coin")
        self.psi = TwoSidedFn(
            self.model.system,
            lambda j: np.add.outer(np.arange(2.0), 0.5 * np.arange(2.0)) + np.outer(np.arange(2.0), np.arange(2.0)),
            past=1,
            future=0,
            name="mixed-past",
        )
        self.reduction = ModelHelper.sinai_reduce(self.model.space, self.psi)
        yield

    def test_identity_on_deep_words(self):
        """Test the identity on every admissible word covering the supports."""
        assert self.reduction.identity_residual(range(0, 6)) == pytest.approx(0.0, abs=1e-12)

    def test_variance_within_transfer_bound(self):
        """Test that sigma_n of psi and of its reduction differ by at most 2 sup |u|."""
        space = self.model.space
        shifted = space.sequence(lambda j: self.psi.values(j + 1), depth=2, name="psi-shifted")
        model = self.model.with_observable(self.reduction.phi)
        rpf = model.solve(horizon=70)
        sup_u = max(float(np.abs(self.reduction.u.values(j)).max()) for j in range(70))
        for n in (16, 64):
            _, var_psi, _ = DecompositionHelper.sum_moments(rpf, shifted, n)
            _, var_phi, _ = DecompositionHelper.sum_moments(rpf, self.reduction.phi, n)
            assert abs(math.sqrt(var_psi) - math.sqrt(var_phi)) <= 2.0 * sup_u


class TestPreviousSymbolReduction:
    """Test the zoo's sinai_prev model built from psi_j = x_{j-1}."""

    @pytest.fixture(autouse=True)
    def setup_method(self):
        """Reduce the previous-symbol potential on the fair coin."""
        self.model = ModelZoo.build("sinai_prev")
        self.psi = TwoSidedFn(
            self.model.system,
            lambda j: np.add.outer(np.arange(2.0), np.zeros(2)),
            past=1,
            future=0,
        )
        self.reduction = ModelHelper.sinai_reduce(self.model.space, self.psi)
        yield

    def test_zoo_observable_is_reduction(self):
        """Test that the zoo model carries phi_j = x_j with reference past 0."""
        assert self.model.metadata["reference_past"] == [0]
        for j in range(4):
            np.testing.assert_allclose(self.model.observable.native(j), self.reduction.phi.native(j))
        np.testing.assert_allclose(self.model.observable.native(0), [[0.0, 0.0], [1.0, 1.0]])

    def test_identity_exhaustive(self):
        """Test the identity on every admissible word for j = 0, ..., 3."""
        assert self.reduction.identity_residual(range(0, 4)) == pytest.approx(0.0, abs=1e-12)

    def test_transfer_function(self):
        """Test that u_j(x) = x_{j-1} against the reference past 0."""
        for j in range(4):
            np.testing.assert_allclose(self.reduction.u.values(j), [[0.0, 0.0], [1.0, 1.0]])

    def test_sigma_gap_every_n(self):
        """Test |sigma_n(psi) - sigma_n(phi)| <= 2 sup |u| for every n up to 64."""
        space = self.model.space
        shifted = space.sequence(lambda j: self.psi.values(j + 1), depth=2, name="psi-shifted")
        rpf = self.model.solve(horizon=70)
        sup_u = max(float(np.abs(self.reduction.u.values(j)).max()) for j in range(70))
        assert sup_u == pytest.approx(1.0)
        psi_curve = DecompositionHelper.moment_curve(rpf, shifted, 64)
        phi_curve = DecompositionHelper.moment_curve(rpf, self.model.observable, 64)
        for n in range(1, 65):
            assert abs(psi_curve.sigma(n) - phi_curve.sigma(n)) <= 2.0 * sup_u
