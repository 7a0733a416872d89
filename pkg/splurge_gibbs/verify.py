"""
Discrepancy statistics for central and local limit theorems.

Each statistic compares an exact law (lattice PMF, atomic law or smoothed density) with
its Gaussian prediction; the report helpers evaluate them over a geometric n grid and
turn the resulting curves into trend verdicts.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats

from splurge_gibbs.decomp import DecompositionHelper, ReducibleDecomposition
from splurge_gibbs.dist import DiscreteLaw, DistributionHelper, LatticeLaw
from splurge_gibbs.exceptions import (
    SplurgeDegenerateVarianceError,
    SplurgeGibbsError,
    SplurgeParameterError,
    SplurgeSpanMismatchError,
)
from splurge_gibbs.funcspace import FiniteDepthFn, FunctionSequence
from splurge_gibbs.transfer import RpfData, TransferHelper

logger = logging.getLogger(__name__)


@dataclass
class LltReport:
    """Per-n discrepancy values and trend verdicts for one model and observable."""

    model: str
    n_grid: list[int]
    sigma: list[float] = field(default_factory=list)
    metrics: dict[str, list[float | None]] = field(default_factory=dict)
    verdicts: dict[str, str] = field(default_factory=dict)
    notes: dict[str, Any] = field(default_factory=dict)

    def record(
        self,
        metric: str,
        value: float | None,
    ) -> None:
        self.metrics.setdefault(metric, []).append(value)

    def to_rows(self) -> list[dict[str, Any]]:
        rows: list[dict[str, Any]] = []
        for metric, values in self.metrics.items():
            for n, sigma, value in zip(self.n_grid, self.sigma, values, strict=True):
                if value is not None:
                    rows.append({"model": self.model, "n": n, "sigma": sigma, "metric": metric, "value": value})
        return rows

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "n_grid": self.n_grid,
            "sigma": self.sigma,
            "metrics": self.metrics,
            "verdicts": self.verdicts,
            "notes": self.notes,
        }


class VerificationHelper:
    """
    CLT, LLT and Edgeworth discrepancies.

    Attributes:
        T_GRID (np.ndarray): standardized evaluation grid, step 0.01 on [-6, 6]
        MIN_SIGMA_CLT (float): smallest sigma_n accepted by the CLT distance
        MIN_SIGMA_LLT (float): smallest sigma_n accepted by LLT and Edgeworth statistics
        DEFAULT_DECAY (float): error(4n) <= DEFAULT_DECAY * error(n) counts as decay
        MARTINGALE_TAIL (float): variance tail below which the martingale sum is truncated
    """

    T_GRID: np.ndarray = np.arange(-600, 601) / 100.0
    MIN_SIGMA_CLT: float = 0.5
    MIN_SIGMA_LLT: float = 3.0
    DEFAULT_DECAY: float = 0.7
    DEFAULT_ACCEPT: float = 0.02
    MARTINGALE_TAIL: float = 1e-6
    EDGEWORTH_CLASSICAL: str = "classical"
    EDGEWORTH_LITERAL: str = "literal"

    @staticmethod
    def _require_sigma(
        sigma: float,
        minimum: float,
        *,
        statistic: str,
    ) -> None:
        if not sigma >= minimum:
            msg = f"sigma_n={sigma:.4g} too small for the {statistic}"
            raise SplurgeDegenerateVarianceError(msg, details=f"requires sigma_n >= {minimum}")

    @classmethod
    def clt_error(
        cls,
        law: DiscreteLaw,
    ) -> float:
        """
        Kolmogorov distance between the standardized law and the standard normal on the t grid.

        Example:
            Binomial(100, 1/2) gives about 0.0398.
        """
        sigma = math.sqrt(max(law.variance, 0.0))
        cls._require_sigma(sigma, cls.MIN_SIGMA_CLT, statistic="CLT distance")
        empirical = law.cdf(law.mean + sigma * cls.T_GRID)
        return float(np.abs(empirical - stats.norm.cdf(cls.T_GRID)).max())

    @classmethod
    def llt_grid(
        cls,
        mean: float,
        sigma: float,
    ) -> np.ndarray:
        """u = E + sigma k / 50 for |k| <= 250, plus 20 far-field points."""
        near = mean + sigma * np.arange(-250, 251) / 50.0
        far_offsets = sigma * (5.0 + 5.0 * np.arange(1, 11))
        return np.concatenate([near, mean - far_offsets, mean + far_offsets])

    @classmethod
    def nonlattice_llt_error(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        n: int,
        *,
        t0: float = DistributionHelper.DEFAULT_T0,
        q0: FiniteDepthFn | None = None,
    ) -> float:
        """sup_u |sqrt(2 pi) sigma_n E[g(S_n - u)] - exp(-(u - E)^2 / (2 sigma_n^2))| with the Fejer kernel g."""
        mean, variance, _ = DecompositionHelper.sum_moments(rpf, f, n, q0=q0)
        sigma = math.sqrt(max(variance, 0.0))
        cls._require_sigma(sigma, cls.MIN_SIGMA_LLT, statistic="non-lattice LLT")
        us = cls.llt_grid(mean, sigma)
        density = DistributionHelper.smoothed_density(rpf, f, n, us, t0=t0, q0=q0)
        gaussian = np.exp(-((us - mean) ** 2) / (2.0 * variance))
        return float(np.abs(math.sqrt(2.0 * math.pi) * sigma * density - gaussian).max())

    @staticmethod
    def lattice_span(law: LatticeLaw) -> int:
        """gcd of the differences between charged support points (0 for a point mass)."""
        charged = np.flatnonzero(law.masses > 1e-14)
        if charged.size < 2:
            return 0
        return int(np.gcd.reduce(np.diff(charged)))

    @classmethod
    def lattice_llt_error(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        n: int,
        *,
        q0: FiniteDepthFn | None = None,
        law: LatticeLaw | None = None,
    ) -> float:
        """
        sup over integers u of |sqrt(2 pi) sigma_n P(S_n = u) - exp(-(u - E)^2 / (2 sigma_n^2))|.

        Raises:
            SplurgeSpanMismatchError: If the support is not of span 1
        """
        pmf = law or DistributionHelper.lattice_pmf(rpf, f, n, q0=q0)
        span = cls.lattice_span(pmf)
        if span != 1:
            msg = f"Detected lattice span {span}, expected 1"
            raise SplurgeSpanMismatchError(msg, details=f"rescale '{f.name}' by 1/{span} first")
        sigma = math.sqrt(max(pmf.variance, 0.0))
        cls._require_sigma(sigma, cls.MIN_SIGMA_CLT, statistic="lattice LLT")
        gaussian = np.exp(-((pmf.atoms - pmf.mean) ** 2) / (2.0 * sigma**2))
        return float(np.abs(math.sqrt(2.0 * math.pi) * sigma * pmf.masses - gaussian).max())

    @classmethod
    def edgeworth_error(
        cls,
        law: DiscreteLaw,
        *,
        lattice: bool = False,
        mode: str = EDGEWORTH_CLASSICAL,
    ) -> float:
        """
        sigma_n sup_t |P(S_bar_n / sigma_n <= t) - Phi(t) - correction(t)|.

        The classical correction is -kappa3 / (6 sigma^3) (t^2 - 1) phi(t); ``mode="literal"``
        uses kappa3 / (6 sigma^3) (t^3 - 3t) phi(t) instead. Lattice laws are evaluated at the
        mid-lattice points (u + 1/2 - E) / sigma.

        Note: (t^3 - 3t) phi(t) is the first-order term of the density expansion, while
        (t^2 - 1) phi(t) is the matching term of the distribution function.
        """
        if mode not in (cls.EDGEWORTH_CLASSICAL, cls.EDGEWORTH_LITERAL):
            msg = f"Unknown Edgeworth mode '{mode}'"
            raise SplurgeParameterError(msg, details=f"expected {cls.EDGEWORTH_CLASSICAL} or {cls.EDGEWORTH_LITERAL}")
        mean = law.mean
        sigma = math.sqrt(max(law.variance, 0.0))
        cls._require_sigma(sigma, cls.MIN_SIGMA_LLT, statistic="Edgeworth expansion")
        skew = law.third_central / (6.0 * sigma**3)

        if lattice:
            lo = math.floor(mean - 6.0 * sigma)
            hi = math.ceil(mean + 6.0 * sigma)
            us = np.arange(lo, hi + 1, dtype=np.float64)
            ts = (us + 0.5 - mean) / sigma
            empirical = law.cdf(us)
        else:
            ts = cls.T_GRID
            empirical = law.cdf(mean + sigma * ts)

        density = stats.norm.pdf(ts)
        if mode == cls.EDGEWORTH_CLASSICAL:
            correction = -skew * (ts**2 - 1.0) * density
        else:
            correction = skew * (ts**3 - 3.0 * ts) * density
        return float(sigma * np.abs(empirical - stats.norm.cdf(ts) - correction).max())

    @classmethod
    def martingale_cutoff(
        cls,
        var_m: np.ndarray,
        *,
        tail: float = MARTINGALE_TAIL,
    ) -> int:
        """Smallest J with sum_{j >= J} Var(M_j) <= tail over the validated window."""
        tails = np.cumsum(var_m[::-1])[::-1]
        below = np.flatnonzero(tails <= tail)
        return int(below[0]) if below.size else int(var_m.size)

    @classmethod
    def reducible_llt_error(
        cls,
        rpf: RpfData,
        decomposition: ReducibleDecomposition,
        n: int,
        *,
        t0: float = DistributionHelper.DEFAULT_T0,
        q0: FiniteDepthFn | None = None,
    ) -> float:
        """
        Generalized local limit discrepancy for a reducible observable.

        With A = S_J M + g_0 and u on the coset C_n + aZ, C_n = sum_j c_j, the local factor
        a sum_k E[g(ka + A - g_n)] is evaluated through Poisson summation as
        sum_m ghat(2 pi m / a) chi_A(2 pi m / a) conj(chi_{g_n}(2 pi m / a)), which is a finite
        sum because the kernel's transform vanishes outside [-T0, T0].

        Raises:
            SplurgeDecompositionInvalidError: If the supplied decomposition fails a check
        """
        var_m = decomposition.validate(rpf, rpf.horizon - 1)
        f = decomposition.observable
        a = decomposition.span
        mean, variance, _ = DecompositionHelper.sum_moments(rpf, f, n, q0=q0)
        sigma = math.sqrt(max(variance, 0.0))
        cls._require_sigma(sigma, cls.MIN_SIGMA_LLT, statistic="reducible LLT")

        cutoff = max(cls.martingale_cutoff(var_m), 1)
        martingale = decomposition.martingale
        coboundary = decomposition.coboundary
        depth = max(martingale.depth, coboundary.depth)

        def limit_part(j: int) -> np.ndarray:
            values = martingale.values(j, depth)
            return values + coboundary.values(0, depth) if j == 0 else values

        a_sum = f.space.sequence(limit_part, depth=depth, name="martingale-limit")
        m_max = math.floor(t0 * a / (2.0 * math.pi) - 1e-12)
        frequencies = 2.0 * math.pi * np.arange(-m_max, m_max + 1) / a
        chi_a = DistributionHelper.char_fn_values(rpf, a_sum, cutoff, frequencies, q0=q0)
        g_n = coboundary.values(n, coboundary.depth)
        phases = np.exp(1j * frequencies.reshape((-1,) + (1,) * g_n.ndim) * g_n)
        chi_g = TransferHelper.integrate_values(rpf, n, phases, table_rank=g_n.ndim)
        weights = np.maximum(0.0, 1.0 - np.abs(frequencies) / t0) * chi_a * np.conj(chi_g)

        offset = 0.0
        if decomposition.offset is not None:
            offset = sum(
                float(TransferHelper.integrate_values(rpf, j, decomposition.offset.values(j, rpf.depth)))
                for j in range(n)
            )
        k_lo = math.floor((mean - 5.0 * sigma - offset) / a)
        k_hi = math.ceil((mean + 5.0 * sigma - offset) / a)
        us = offset + a * np.arange(k_lo, k_hi + 1, dtype=np.float64)
        local = np.real(np.exp(1j * np.outer(offset - us, frequencies)) @ weights)

        density = DistributionHelper.smoothed_density(rpf, f, n, us, t0=t0, q0=q0)
        gaussian = np.exp(-((us - mean) ** 2) / (2.0 * variance))
        logger.debug("Reducible LLT: span %.4g, cutoff J=%d, %d Fourier terms", a, cutoff, frequencies.size)
        return float(np.abs(math.sqrt(2.0 * math.pi) * sigma * density - gaussian * local).max())

    # Reports

    @classmethod
    def trend_verdict(
        cls,
        n_grid: list[int],
        errors: list[float | None],
        *,
        decay: float = DEFAULT_DECAY,
        accept: float = DEFAULT_ACCEPT,
    ) -> str:
        """
        "decreasing" when every (n, 4n) pair decays by ``decay`` or the last error is below
        ``accept``; "bounded" when the last error is at most twice the first; else "growing".
        """
        points = [(n, e) for n, e in zip(n_grid, errors, strict=True) if e is not None]
        if len(points) < 2:
            return "insufficient"
        by_n = dict(points)
        pairs = [(by_n[n], by_n[4 * n]) for n in by_n if 4 * n in by_n]
        last = points[-1][1]
        if last <= accept or (pairs and all(late <= decay * early for early, late in pairs)):
            return "decreasing"
        if last <= 2.0 * points[0][1]:
            return "bounded"
        return "growing"

    @classmethod
    def report(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        n_grid: list[int] | tuple[int, ...],
        *,
        model: str = "",
        t0_values: list[float] | tuple[float, ...] = (DistributionHelper.DEFAULT_T0,),
        q0: FiniteDepthFn | None = None,
        decomposition: ReducibleDecomposition | None = None,
        edgeworth_mode: str = EDGEWORTH_CLASSICAL,
    ) -> LltReport:
        """Evaluate every applicable statistic at each n and attach trend verdicts."""
        grid = sorted({int(n) for n in n_grid})
        result = LltReport(model=model or f.name, n_grid=grid)
        integer_valued = f.is_integer_valued(range(grid[-1]))
        result.notes["integer_valued"] = integer_valued
        result.notes["edgeworth_evaluation"] = "mid-lattice" if integer_valued else "t-grid"
        curve = DecompositionHelper.moment_curve(rpf, f, grid[-1], q0=q0)

        for n in grid:
            sigma = curve.sigma(n)
            result.sigma.append(sigma)
            law: DiscreteLaw | None
            try:
                law = (
                    DistributionHelper.lattice_pmf(rpf, f, n, q0=q0)
                    if integer_valued
                    else DistributionHelper.atomic_law(rpf, f, n, q0=q0)
                )
            except SplurgeGibbsError as e:
                logger.warning("No exact law for '%s' at n=%d: %s", f.name, n, e)
                law = None

            result.record("clt_error", cls._optional(lambda: cls.clt_error(law) if law else None))
            for t0 in t0_values:
                result.record(
                    f"nonlattice_error_T0={t0:g}",
                    cls._optional(lambda t0=t0: cls.nonlattice_llt_error(rpf, f, n, t0=t0, q0=q0)),
                )
            if integer_valued and isinstance(law, LatticeLaw):
                pmf = law
                result.record("lattice_error", cls._optional(lambda: cls.lattice_llt_error(rpf, f, n, law=pmf)))
            result.record(
                "edgeworth_error",
                cls._optional(
                    lambda: cls.edgeworth_error(law, lattice=integer_valued, mode=edgeworth_mode) if law else None
                ),
            )
            if decomposition is not None:
                result.record(
                    "reducible_error",
                    cls._optional(lambda: cls.reducible_llt_error(rpf, decomposition, n, q0=q0)),
                )

        for metric, values in result.metrics.items():
            result.verdicts[metric] = cls.trend_verdict(grid, values)
        logger.info("LLT report for '%s': %s", result.model, result.verdicts)
        return result

    @staticmethod
    def _optional(compute: Any) -> float | None:
        try:
            value = compute()
        except (SplurgeDegenerateVarianceError, SplurgeSpanMismatchError) as e:
            logger.debug("Statistic skipped: %s", e)
            return None
        return None if value is None else float(value)
