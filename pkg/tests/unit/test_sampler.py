"""
Tests for the forward path sampler.
"""

import numpy as np
import pytest

from splurge_gibbs.exceptions import SplurgeParameterError
from splurge_gibbs.models import ModelZoo
from splurge_gibbs.sampler import EmpiricalReport, SamplerHelper
from splurge_gibbs.symbolic import Word


@pytest.fixture(scope="module")
def golden():
    model = ModelZoo.build("golden_parry")
    return model, model.solve(horizon=24)


@pytest.fixture(scope="module")
def markov():
    model = ModelZoo.build("markov")
    return model, model.solve(horizon=24)


class TestForwardKernels:
    """Test conditional tables of the Gibbs family."""

    def test_markov_tables_are_the_chain(self, markov):
        """Test that the conditional tables reproduce the transition matrix."""
        model, rpf = markov
        kernels = SamplerHelper.forward_kernels(rpf, count=6)
        assert kernels.count == 6
        assert kernels.max_length() == 7
        np.testing.assert_allclose(kernels.initial, [0.5, 0.5], atol=1e-12)
        for table in kernels.tables:
            np.testing.assert_allclose(table, model.chain.transition(0), atol=1e-12)

    def test_golden_forbidden_transition(self, golden):
        """Test that the forbidden transition gets no mass."""
        _, rpf = golden
        kernels = SamplerHelper.forward_kernels(rpf, count=3)
        assert kernels.tables[1][1, 1] == 0.0
        np.testing.assert_allclose(kernels.tables[1].sum(axis=-1), 1.0, atol=1e-12)

    def test_count_beyond_horizon(self, golden):
        """Test that more kernels than the horizon allows raise."""
        _, rpf = golden
        with pytest.raises(SplurgeParameterError):
            SamplerHelper.forward_kernels(rpf, count=rpf.horizon + 2)


class TestSamplePaths:
    """Test path generation."""

    def test_paths_are_admissible(self, golden):
        """Test that golden mean paths never contain 11."""
        model, rpf = golden
        kernels = SamplerHelper.forward_kernels(rpf, count=10)
        paths = SamplerHelper.sample_paths(kernels, 11, 500, seed=3)
        assert paths.shape == (500, 11)
        for row in paths:
            assert model.system.is_admissible(Word(base=0, symbols=tuple(int(s) for s in row)))
            assert not np.any((row[:-1] == 1) & (row[1:] == 1))

    def test_threads_and_batches_do_not_change_paths(self, markov):
        """Test that paths depend only on seed and sample index."""
        _, rpf = markov
        kernels = SamplerHelper.forward_kernels(rpf, count=12)
        single = SamplerHelper.sample_paths(kernels, 12, 300, seed=5, threads=1, batch_size=64)
        pooled = SamplerHelper.sample_paths(kernels, 12, 300, seed=5, threads=4, batch_size=7)
        np.testing.assert_array_equal(single, pooled)

    def test_first_index_selects_streams(self, markov):
        """Test that a shifted first index continues the same stream sequence."""
        _, rpf = markov
        kernels = SamplerHelper.forward_kernels(rpf, count=8)
        whole = SamplerHelper.sample_paths(kernels, 8, 20, seed=2)
        tail = SamplerHelper.sample_paths(kernels, 8, 10, seed=2, first_index=10)
        np.testing.assert_array_equal(whole[10:], tail)

    def test_bad_lengths(self, markov):
        """Test zero length, negative counts and paths longer than the kernels."""
        _, rpf = markov
        kernels = SamplerHelper.forward_kernels(rpf, count=4)
        with pytest.raises(SplurgeParameterError):
            SamplerHelper.sample_paths(kernels, 0, 10)
        with pytest.raises(SplurgeParameterError):
            SamplerHelper.sample_paths(kernels, 4, -1)
        with pytest.raises(SplurgeParameterError):
            SamplerHelper.sample_paths(kernels, kernels.max_length() + 1, 10)
        assert SamplerHelper.sample_paths(kernels, 3, 0).shape == (0, 3)


class TestEmpiricalChecks:
    """Test empirical comparisons with exact values."""

    def test_birkhoff_sums(self, markov):
        """Test sums of the first symbol along hand-written paths."""
        model, _ = markov
        samples = np.array([[0, 1, 1, 0], [1, 1, 1, 1]])
        np.testing.assert_allclose(SamplerHelper.birkhoff_sums(samples, model.observable, 4), [2.0, 4.0])
        with pytest.raises(SplurgeParameterError):
            SamplerHelper.birkhoff_sums(samples, model.observable, 5)

    def test_markov_check_passes(self, markov):
        """Test that a sampled chain matches its exact moments, transform and law."""
        model, rpf = markov
        kernels = SamplerHelper.forward_kernels(rpf, count=16)
        samples = SamplerHelper.sample_paths(kernels, 17, 20_000, seed=11)
        report = SamplerHelper.empirical_check(rpf, samples, model.observable, 16)
        kinds = {row["kind"] for row in report.rows}
        assert kinds == {"mean", "variance", "char_fn", "pmf"}
        assert len(report.flagged) <= 2
        assert report.to_dict()["n_samples"] == 20_000

    def test_cylinder_check(self, golden):
        """Test cylinder frequencies against Gibbs masses."""
        _, rpf = golden
        kernels = SamplerHelper.forward_kernels(rpf, count=6)
        samples = SamplerHelper.sample_paths(kernels, 6, 20_000, seed=4)
        report = SamplerHelper.cylinder_check(rpf, samples, max_length=2)
        assert [row["key"] for row in report.rows][:2] == ["0", "1"]
        assert len(report.flagged) <= 1

    def test_too_few_samples(self, markov):
        """Test that a single sample raises."""
        model, rpf = markov
        with pytest.raises(SplurgeParameterError):
            SamplerHelper.empirical_check(rpf, np.zeros((1, 8), dtype=np.int64), model.observable, 4)

    def test_report_flags(self):
        """Test the flag rule of report rows."""
        report = EmpiricalReport(n=4, n_samples=100)
        report.add("mean", "S_n", 2.5, 2.0, 0.1)
        report.add("mean", "S_n", 2.05, 2.0, 0.1)
        assert [row["flagged"] for row in report.to_rows()] == [True, False]
        assert report.to_dict()["flagged"] == 1

    def test_to_lines(self):
        """Test compact path strings."""
        assert SamplerHelper.to_lines(np.array([[0, 1, 1], [1, 0, 0]])) == ["011", "100"]
