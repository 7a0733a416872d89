"""
Monte Carlo sampling from sequential Gibbs measures and empirical cross-checks.

A Gibbs measure of a depth-D normalized potential is a forward Markov chain of order D-1,
with transition P(x_{j+D-1} = b | x_j ... x_{j+D-2} = w) = mu_j([w b]) / mu_j([w]). Each sample
draws its uniforms from its own counter-based stream keyed by (seed, sample index), so any
sample can be regenerated in isolation and batch partitioning never changes a path.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from splurge_gibbs.decomp import DecompositionHelper
from splurge_gibbs.dist import DistributionHelper
from splurge_gibbs.exceptions import SplurgeNoConvergenceError, SplurgeParameterError
from splurge_gibbs.funcspace import FunctionSequence
from splurge_gibbs.protocols import ObservableProtocol
from splurge_gibbs.random_helper import RandomHelper
from splurge_gibbs.symbolic import SymbolicHelper, Word
from splurge_gibbs.transfer import RpfData, TransferHelper

logger = logging.getLogger(__name__)


@dataclass
class ForwardKernels:
    """
    Initial law of the first D-1 symbols and conditional tables for steps 0 .. count-1.

    ``tables[j]`` has shape (d_j, ..., d_{j+D-1}); its last axis is the law of x_{j+D-1}
    given the preceding D-1 symbols.
    """

    depth: int
    initial: np.ndarray
    tables: list[np.ndarray]

    @property
    def count(self) -> int:
        return len(self.tables)

    def max_length(self) -> int:
        """Longest path the kernels can generate."""
        return self.count + self.depth - 1


@dataclass
class EmpiricalReport:
    """Empirical quantities next to their exact values and the tolerance used to flag them."""

    n: int
    n_samples: int
    rows: list[dict[str, Any]] = field(default_factory=list)

    def add(
        self,
        kind: str,
        key: str,
        empirical: float,
        exact: float,
        tolerance: float,
    ) -> None:
        self.rows.append(
            {
                "kind": kind,
                "key": key,
                "empirical": float(empirical),
                "exact": float(exact),
                "tolerance": float(tolerance),
                "flagged": bool(abs(empirical - exact) > tolerance),
            },
        )

    @property
    def flagged(self) -> list[dict[str, Any]]:
        return [row for row in self.rows if row["flagged"]]

    def to_rows(self) -> list[dict[str, Any]]:
        return list(self.rows)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "n_samples": self.n_samples,
            "flagged": len(self.flagged),
            "rows": self.rows,
        }


class SamplerHelper:
    """
    Forward path sampler.

    Attributes:
        DEFAULT_BATCH (int): samples generated per worker task
        ROW_TOL (float): tolerance on conditional tables summing to one
        DEFAULT_SIGMAS (float): width of the flagging band in standard errors
    """

    DEFAULT_BATCH: int = 4096
    ROW_TOL: float = 1e-9
    DEFAULT_SIGMAS: float = 4.0
    DEFAULT_T_VALUES: tuple[float, ...] = (0.5, 1.0, math.pi)

    @classmethod
    def forward_kernels(
        cls,
        rpf: RpfData,
        *,
        count: int | None = None,
    ) -> ForwardKernels:
        """
        Conditional tables mu_j([w b]) / mu_j([w]) for 0 <= j < count.

        Raises:
            SplurgeNoConvergenceError: If an admissible prefix carries no mass or a row does not
                sum to one
        """
        steps = rpf.horizon + 1 if count is None else count
        if not 0 <= steps <= rpf.horizon + 1:
            msg = "Kernel count exceeds the solved horizon"
            raise SplurgeParameterError(msg, details=f"count={steps}, horizon={rpf.horizon}")
        space = rpf.space
        depth = rpf.depth

        tables: list[np.ndarray] = []
        for j in range(steps):
            weights = rpf.measure_weights(j)
            prefix = weights.sum(axis=-1, keepdims=True)
            admissible_prefix = space.mask(j, depth - 1)
            if np.any(prefix[..., 0][admissible_prefix] <= 0.0):
                msg = f"Admissible prefix without mass at j={j}"
                raise SplurgeNoConvergenceError(msg, details="Gibbs measure lost full support")
            table = np.where(prefix > 0.0, weights / np.where(prefix > 0.0, prefix, 1.0), 0.0)
            rows = table.sum(axis=-1)[admissible_prefix]
            if np.any(np.abs(rows - 1.0) > cls.ROW_TOL):
                msg = f"Conditional rows do not sum to one at j={j}"
                raise SplurgeNoConvergenceError(msg, details=f"max gap {np.abs(rows - 1.0).max():.3g}")
            tables.append(table)

        initial = rpf.measure_weights(0).sum(axis=-1)
        return ForwardKernels(depth=depth, initial=initial / initial.sum(), tables=tables)

    @staticmethod
    def _sample_batch(
        kernels: ForwardKernels,
        length: int,
        seed: int,
        start: int,
        stop: int,
    ) -> np.ndarray:
        count = stop - start
        draws = max(1, length - kernels.depth + 2)
        uniforms = np.empty((count, draws))
        for row, index in enumerate(range(start, stop)):
            uniforms[row] = RandomHelper.uniform_block(seed, index, draws)

        memory = kernels.depth - 1
        paths = np.empty((count, length), dtype=np.int64)
        initial_cdf = np.cumsum(kernels.initial.ravel())
        flat = np.minimum(np.searchsorted(initial_cdf, uniforms[:, 0], side="right"), initial_cdf.size - 1)
        first = np.stack(np.unravel_index(flat, kernels.initial.shape), axis=1)
        prefix_len = min(memory, length)
        paths[:, :prefix_len] = first[:, :prefix_len]

        for step in range(length - memory):
            cdf = np.cumsum(kernels.tables[step], axis=-1)
            rows = cdf[tuple(paths[:, step + k] for k in range(memory))]
            chosen = (uniforms[:, step + 1, None] >= rows).sum(axis=1)
            paths[:, step + memory] = np.minimum(chosen, rows.shape[1] - 1)
        return paths

    @classmethod
    def sample_paths(
        cls,
        kernels: ForwardKernels,
        length: int,
        n_samples: int,
        *,
        seed: int = RandomHelper.DEFAULT_SEED,
        first_index: int = 0,
        threads: int = 1,
        batch_size: int = DEFAULT_BATCH,
    ) -> np.ndarray:
        """
        ``n_samples`` admissible words x_0 ... x_{length-1}, one per row.

        Sample i uses the stream (seed, first_index + i) only.
        """
        if length < 1 or n_samples < 0:
            msg = "Sample length must be >= 1 and sample count >= 0"
            raise SplurgeParameterError(msg, details=f"length={length}, n_samples={n_samples}")
        if length > kernels.max_length():
            msg = "Requested paths are longer than the kernels allow"
            raise SplurgeParameterError(msg, details=f"length={length}, max={kernels.max_length()}")

        bounds = [
            (first_index + lo, first_index + min(lo + batch_size, n_samples))
            for lo in range(0, n_samples, max(1, batch_size))
        ]
        if threads > 1 and len(bounds) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(lambda b: cls._sample_batch(kernels, length, seed, *b), bounds))
        else:
            parts = [cls._sample_batch(kernels, length, seed, lo, hi) for lo, hi in bounds]
        logger.debug("Sampled %d paths of length %d in %d batch(es)", n_samples, length, len(bounds))
        if not parts:
            return np.empty((0, length), dtype=np.int64)
        return np.concatenate(parts, axis=0)

    @staticmethod
    def birkhoff_sums(
        samples: np.ndarray,
        f: ObservableProtocol,
        n: int,
    ) -> np.ndarray:
        """S_n f along each sampled path; paths need n + depth - 1 symbols."""
        depth = f.depth
        if samples.shape[1] < n + depth - 1:
            msg = "Sampled paths are too short for the Birkhoff sum"
            raise SplurgeParameterError(msg, details=f"need {n + depth - 1} symbols, have {samples.shape[1]}")
        totals = np.zeros(samples.shape[0], dtype=np.result_type(f.native(0), np.float64))
        for j in range(n):
            totals = totals + f.native(j)[tuple(samples[:, j + k] for k in range(depth))]
        return totals

    @classmethod
    def empirical_check(
        cls,
        rpf: RpfData,
        samples: np.ndarray,
        f: FunctionSequence,
        n: int,
        *,
        t_values: tuple[float, ...] | list[float] = DEFAULT_T_VALUES,
        sigmas: float = DEFAULT_SIGMAS,
        include_pmf: bool = True,
    ) -> EmpiricalReport:
        """
        Compare empirical moments, characteristic function and PMF of S_n with exact values.

        Means use a sigma / sqrt(N) band, variances a band from the empirical fourth moment,
        characteristic function values 1 / sqrt(N) and PMF cells the binomial standard error,
        each scaled by ``sigmas``.
        """
        n_samples = samples.shape[0]
        if n_samples < 2:
            msg = "Empirical checks need at least two samples"
            raise SplurgeParameterError(msg, details=f"Got {n_samples}")
        sums = cls.birkhoff_sums(samples, f, n)
        report = EmpiricalReport(n=n, n_samples=n_samples)
        root_n = math.sqrt(n_samples)

        mean, variance, _ = DecompositionHelper.sum_moments(rpf, f, n)
        emp_mean = float(np.mean(sums))
        centered = sums - emp_mean
        emp_var = float(np.mean(centered**2))
        fourth = float(np.mean(centered**4))
        report.add("mean", "S_n", emp_mean, mean, sigmas * math.sqrt(max(variance, 0.0)) / root_n)
        report.add("variance", "S_n", emp_var, variance, sigmas * math.sqrt(max(fourth - emp_var**2, 0.0)) / root_n)

        exact_phi = DistributionHelper.char_fn_values(rpf, f, n, list(t_values))
        for t, phi in zip(t_values, exact_phi, strict=True):
            emp_phi = complex(np.mean(np.exp(1j * t * sums)))
            report.add("char_fn", f"t={t:.6g}", abs(emp_phi - phi), 0.0, sigmas / root_n)

        if include_pmf and f.is_integer_valued(range(n)):
            law = DistributionHelper.lattice_pmf(rpf, f, n)
            values, counts = np.unique(np.round(sums).astype(np.int64), return_counts=True)
            observed = dict(zip(values.tolist(), counts.tolist(), strict=True))
            for atom, mass in zip(law.atoms, law.masses, strict=True):
                if mass <= 0.0 and int(atom) not in observed:
                    continue
                frequency = observed.get(int(atom), 0) / n_samples
                band = sigmas * math.sqrt(max(mass * (1.0 - mass), 0.0) / n_samples)
                report.add("pmf", f"u={int(atom)}", frequency, float(mass), band)

        logger.info("Empirical check at n=%d: %d of %d rows flagged", n, len(report.flagged), len(report.rows))
        return report

    @classmethod
    def cylinder_check(
        cls,
        rpf: RpfData,
        samples: np.ndarray,
        *,
        j: int = 0,
        max_length: int = 3,
        sigmas: float = DEFAULT_SIGMAS,
    ) -> EmpiricalReport:
        """Empirical cylinder frequencies against gibbs_cylinder for all words up to max_length at j."""
        n_samples = samples.shape[0]
        report = EmpiricalReport(n=max_length, n_samples=n_samples)
        for length in range(1, max_length + 1):
            windows = samples[:, j : j + length]
            for word in SymbolicHelper.enumerate_words(rpf.system, j, length):
                exact = TransferHelper.gibbs_cylinder(rpf, word)
                frequency = float(np.all(windows == np.asarray(word.symbols), axis=1).mean())
                band = sigmas * math.sqrt(max(exact * (1.0 - exact), 0.0) / n_samples)
                report.add("cylinder", str(word), frequency, exact, band)
        return report

    @staticmethod
    def to_lines(samples: np.ndarray) -> list[str]:
        """One compact symbol string per path."""
        return [str(Word(base=0, symbols=tuple(int(s) for s in row))) for row in samples]
