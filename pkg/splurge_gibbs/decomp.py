"""
Centering, martingale-coboundary decompositions and exact moments of Birkhoff sums.

For a centered observable the decomposition f_j = A_j + B_j - B_{j+1} o T_j is built by
the forward recursion B_0 = 0, B_{j+1} = L_hat_j(B_j - f_j), which makes L_hat_j A_j = 0
exactly. Moments of S_n under q0 dmu_0 follow from an augmented push-forward of the
powers of S_n through the normalized operators.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, ClassVar

import numpy as np

from splurge_gibbs.common_utils import linear_trend
from splurge_gibbs.exceptions import (
    SplurgeBadDensityError,
    SplurgeDecompositionInvalidError,
    SplurgeNoConvergenceError,
    SplurgeParameterError,
)
from splurge_gibbs.funcspace import FiniteDepthFn, FunctionSequence, pad_values, star_norm_values
from splurge_gibbs.transfer import RpfData, TransferHelper

logger = logging.getLogger(__name__)


class VarianceClass(Enum):
    """
    Outcome of the variance-growth dichotomy.

    - GROWING: sigma_n^2 grows without bound, roughly linearly
    - BOUNDED: sigma_n stays bounded and the martingale variances are summable
    - INDETERMINATE: the n grid is too short to decide
    """

    GROWING = "Growing"
    BOUNDED = "Bounded"
    INDETERMINATE = "Indeterminate"


@dataclass
class CenteredObservable:
    """f_bar_j = f_j - mu_j(f_j) on [0, horizon] together with the means."""

    sequence: FunctionSequence
    means: np.ndarray


@dataclass
class DecompResult:
    """
    Martingale-coboundary decomposition on [0, count).

    ``a_tables[j]`` and ``b_tables[j]`` are value tensors at depth D_w; ``b_tables`` has one
    extra entry, B_count.
    """

    depth: int
    count: int
    a_tables: list[np.ndarray]
    b_tables: list[np.ndarray]
    martingale_residual: np.ndarray
    identity_residual: np.ndarray
    var_a: np.ndarray
    sup_star_a: float
    sup_star_b: float
    masks: list[np.ndarray] = field(repr=False, default_factory=list)

    def a(self, j: int) -> FiniteDepthFn:
        return FiniteDepthFn(j, self.a_tables[j], self.masks[j])

    def b(self, j: int) -> FiniteDepthFn:
        return FiniteDepthFn(j, self.b_tables[j], self.masks[j])

    def var_a_partial_sums(self) -> np.ndarray:
        return np.cumsum(self.var_a)

    def to_dict(self) -> dict[str, Any]:
        return {
            "depth": self.depth,
            "count": self.count,
            "martingale_residual": self.martingale_residual.tolist(),
            "identity_residual": self.identity_residual.tolist(),
            "var_a": self.var_a.tolist(),
            "var_a_partial_sums": self.var_a_partial_sums().tolist(),
            "sup_star_a": self.sup_star_a,
            "sup_star_b": self.sup_star_b,
        }


@dataclass
class MomentCurve:
    """Mean, variance and third central moment of S_n for n = 1..n_max."""

    n: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    third_central: np.ndarray

    def at(self, n: int) -> tuple[float, float, float]:
        if not 1 <= n <= int(self.n[-1]):
            msg = f"n={n} outside the computed moment curve"
            raise SplurgeParameterError(msg, details=f"computed 1..{int(self.n[-1])}")
        k = n - 1
        return float(self.mean[k]), float(self.variance[k]), float(self.third_central[k])

    def sigma(self, n: int) -> float:
        return math.sqrt(max(self.at(n)[1], 0.0))


@dataclass
class VarianceReport:
    verdict: VarianceClass
    n_grid: list[int]
    variance: list[float]
    var_a_partial_sums: list[float]
    evidence: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "n_grid": self.n_grid,
            "variance": self.variance,
            "var_a_partial_sums": self.var_a_partial_sums,
            "evidence": self.evidence,
        }


class DecompositionHelper:
    """
    Decompositions and moments of observables under a solved RPF chain.

    Attributes:
        DEFAULT_N_GRID (tuple[int, ...]): n values used by the variance classifier
        DEFAULT_CENTER_TOL (float): largest accepted mean of a centered observable
        DEFAULT_GROWTH_THRESHOLD (float): sigma_n^2 level above which growth can be declared
        DEFAULT_TAIL_RATIO (float): ratio-test bound for a converging tail
        B_GROWTH_CAP (float): sup|B_j| above this multiple of the geometric bound fails
    """

    DEFAULT_N_GRID: tuple[int, ...] = (8, 16, 32, 64, 128)
    DEFAULT_CENTER_TOL: float = 1e-9
    DEFAULT_GROWTH_THRESHOLD: float = 10.0
    DEFAULT_TAIL_RATIO: float = 0.9
    DEFAULT_R2: float = 0.9
    B_GROWTH_CAP: float = 1e3
    _TINY: float = 1e-12

    @staticmethod
    def _require_depth(
        rpf: RpfData,
        f: FunctionSequence,
    ) -> None:
        if f.depth > rpf.depth:
            msg = f"Observable '{f.name}' is deeper than the working depth"
            raise SplurgeParameterError(
                msg,
                details=f"observable depth {f.depth}, working depth {rpf.depth}; re-solve with depth >= {f.depth}",
            )

    @classmethod
    def center(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
    ) -> CenteredObservable:
        """
        Subtract mu_j(f_j) index by index.

        Example:
            first-symbol on the uniform full 2-shift gives first-symbol - 1/2.
        """
        cls._require_depth(rpf, f)
        depth = rpf.depth
        means = np.array(
            [float(TransferHelper.integrate_values(rpf, j, f.values(j, depth)).real) for j in range(rpf.horizon + 1)]
        )

        def builder(j: int) -> np.ndarray:
            return f.native(j) - means[j]

        centered = FunctionSequence(
            f.space,
            builder,
            depth=f.depth,
            name=f"{f.name}-centered",
            index_range=(0, rpf.horizon + 1),
        )
        return CenteredObservable(sequence=centered, means=means)

    @classmethod
    def martingale_coboundary(
        cls,
        rpf: RpfData,
        centered: FunctionSequence,
        *,
        count: int | None = None,
        center_tol: float = DEFAULT_CENTER_TOL,
    ) -> DecompResult:
        """
        Decompose a centered observable on [0, count).

        Raises:
            SplurgeParameterError: If the observable is not centered
            SplurgeNoConvergenceError: If the coboundary terms blow up
        """
        cls._require_depth(rpf, centered)
        n = count if count is not None else rpf.horizon
        if not 1 <= n <= rpf.horizon:
            msg = "Decomposition window exceeds the solved horizon"
            raise SplurgeParameterError(msg, details=f"count={n}, horizon={rpf.horizon}")

        space = rpf.space
        depth = rpf.depth
        mask = space.mask(0, depth)
        b = np.zeros(mask.shape)
        f_sup = 0.0
        a_tables: list[np.ndarray] = []
        b_tables: list[np.ndarray] = [b]
        masks: list[np.ndarray] = [mask]
        martingale_residual = np.empty(n)
        identity_residual = np.empty(n)
        var_a = np.empty(n)

        for j in range(n):
            mask = space.mask(j, depth)
            f_bar = centered.values(j, depth)
            mean = float(TransferHelper.integrate_values(rpf, j, f_bar))
            if abs(mean) > center_tol:
                msg = f"Observable '{centered.name}' is not centered at j={j}"
                raise SplurgeParameterError(msg, details=f"mu_j(f_j)={mean:.3g}")
            f_sup = max(f_sup, float(np.abs(f_bar[mask]).max()))

            reduced = ((b - f_bar) * rpf.operator_weights(j)).sum(axis=0)
            mask_next = space.mask(j + 1, depth)
            b_next = pad_values(reduced, depth - 1, mask_next)
            shifted = np.broadcast_to(reduced[None, ...], mask.shape) * mask
            a = np.where(mask, f_bar - b + shifted, 0.0)

            identity_residual[j] = float(np.abs(f_bar - (a + b - shifted))[mask].max())
            martingale_residual[j] = float(np.abs(rpf.apply(j, a))[mask_next].max())
            var_a[j] = float((a**2 * rpf.measure_weights(j)).sum())

            a_tables.append(a)
            b_tables.append(b_next)
            masks.append(mask_next)
            b = b_next

        bound = cls.B_GROWTH_CAP * (1.0 + f_sup) / (1.0 - rpf.contraction)
        b_sup = max(float(np.abs(t).max()) for t in b_tables)
        if not math.isfinite(b_sup) or b_sup > bound:
            msg = "Coboundary partial sums do not decay geometrically"
            raise SplurgeNoConvergenceError(msg, details=f"sup|B|={b_sup:.6g}, bound {bound:.6g}")

        sup_star_a = max(float(star_norm_values(t, m, 1.0, 1.0)) for t, m in zip(a_tables, masks, strict=False))
        sup_star_b = max(float(star_norm_values(t, m, 1.0, 1.0)) for t, m in zip(b_tables, masks, strict=True))
        logger.debug(
            "Decomposition of '%s' on [0, %d): max identity residual %.3g, max martingale residual %.3g",
            centered.name,
            n,
            identity_residual.max(),
            martingale_residual.max(),
        )
        return DecompResult(
            depth=depth,
            count=n,
            a_tables=a_tables,
            b_tables=b_tables,
            martingale_residual=martingale_residual,
            identity_residual=identity_residual,
            var_a=var_a,
            sup_star_a=sup_star_a,
            sup_star_b=sup_star_b,
            masks=masks,
        )

    @staticmethod
    def density_values(
        rpf: RpfData,
        q0: FiniteDepthFn | None,
        *,
        atol: float = 1e-9,
    ) -> tuple[np.ndarray, int]:
        """
        Validated value tensor of q0 at base 0 (the constant 1 when omitted) and its rank.

        Raises:
            SplurgeBadDensityError: If q0 is negative somewhere or mu_0(q0) != 1
        """
        if q0 is None:
            return rpf.space.mask(0, rpf.depth).astype(np.float64), rpf.depth
        if q0.base != 0:
            msg = "Initial density must live at base 0"
            raise SplurgeBadDensityError(msg, details=f"got base {q0.base}")
        if q0.is_complex or float(q0.admissible_values().min()) < 0.0:
            msg = "Initial density must be real and nonnegative"
            raise SplurgeBadDensityError(msg, details="negative or complex entries found")
        rank = max(rpf.depth, q0.depth)
        values = pad_values(q0.values, q0.depth, rpf.space.mask(0, rank))
        mass = float(TransferHelper.integrate_values(rpf, 0, values))
        if abs(mass - 1.0) > atol:
            msg = "Initial density does not integrate to one"
            raise SplurgeBadDensityError(msg, details=f"mu_0(q0)={mass:.12g}")
        return values, rank

    @classmethod
    def moment_curve(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        n_max: int,
        *,
        q0: FiniteDepthFn | None = None,
    ) -> MomentCurve:
        """
        Exact mean, variance and third central moment of S_n f under q0 dmu_0.

        The push-forward u^(r)_{j+1} = L_hat_j(sum_s binom(r, s) f_j^{r-s} u^(s)_j) runs on the
        centered observable; E[S_bar_n^r] = mu_n(u^(r)_n) are raw moments of the centered sum,
        so central moments are read off directly and the mean adds back sum_j mu_j(f_j).

        Raises:
            SplurgeBadDensityError: If q0 is not a probability density
        """
        cls._require_depth(rpf, f)
        if not 1 <= n_max <= rpf.horizon:
            msg = "n_max exceeds the solved horizon"
            raise SplurgeParameterError(msg, details=f"n_max={n_max}, horizon={rpf.horizon}")

        space = rpf.space
        depth = rpf.depth
        values, rank = cls.density_values(rpf, q0)
        u = np.zeros((4,) + values.shape)
        u[0] = values
        binom = [[math.comb(r, s) for s in range(4)] for r in range(4)]

        mean = np.empty(n_max)
        variance = np.empty(n_max)
        third = np.empty(n_max)
        mu_sum = 0.0
        for j in range(n_max):
            mask = space.mask(j, rank)
            f_values = f.values(j, depth)
            mu_f = float(TransferHelper.integrate_values(rpf, j, f_values))
            mu_sum += mu_f
            f_bar = pad_values(f_values - mu_f, depth, mask)
            powers = [np.ones_like(f_bar), f_bar, f_bar**2, f_bar**3]
            stacked = np.stack(
                [sum(binom[r][s] * powers[r - s] * u[s] for s in range(r + 1)) for r in range(4)],
            )
            u = rpf.apply(j, stacked, table_rank=rank)
            rank = max(depth, rank - 1)

            raw = TransferHelper.integrate_values(rpf, j + 1, u, table_rank=rank)
            m1, m2, m3 = float(raw[1]), float(raw[2]), float(raw[3])
            mean[j] = mu_sum + m1
            variance[j] = m2 - m1**2
            third[j] = m3 - 3.0 * m1 * m2 + 2.0 * m1**3

        return MomentCurve(n=np.arange(1, n_max + 1), mean=mean, variance=variance, third_central=third)

    @classmethod
    def sum_moments(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        n: int,
        *,
        q0: FiniteDepthFn | None = None,
    ) -> tuple[float, float, float]:
        """
        (mean, variance, third central moment) of S_n f.

        Example:
            iid fair coin, first-symbol, n=16 gives (8.0, 4.0, 0.0).
        """
        return cls.moment_curve(rpf, f, n, q0=q0).at(n)

    @classmethod
    def tail_converges(
        cls,
        terms: np.ndarray,
        *,
        ratio: float = DEFAULT_TAIL_RATIO,
    ) -> bool:
        """Ratio test on the last quarter of a nonnegative series."""
        terms = np.asarray(terms, dtype=np.float64)
        if terms.size < 4:
            return False
        total = float(terms.sum())
        tail = terms[-max(2, terms.size // 4) :]
        if float(tail.max()) <= cls._TINY * (1.0 + total):
            return True
        positive = tail[tail > cls._TINY]
        if positive.size < 2:
            return False
        measured = math.exp(float(np.mean(np.diff(np.log(positive)))))
        return measured <= ratio

    @classmethod
    def classify_variance(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        *,
        n_grid: tuple[int, ...] | list[int] = DEFAULT_N_GRID,
        q0: FiniteDepthFn | None = None,
        growth_threshold: float = DEFAULT_GROWTH_THRESHOLD,
    ) -> VarianceReport:
        """
        Decide between bounded and growing variance of S_n f.

        Bounded needs a converging tail of Var(A_j) and sigma_n^2 at the end of the grid no
        larger than 1.5 times its value at the middle. Growing needs sigma_n^2 >= the growth
        threshold, a positive linear trend with R^2 >= 0.9 and a non-converging tail.
        Anything else is Indeterminate.

        The growth threshold applies to the variance sigma_n^2, not to sigma_n; the fair coin
        crosses 10 at n = 40 but would need n = 400 for sigma_n >= 10.
        """
        grid = sorted({int(n) for n in n_grid})
        if len(grid) < 2:
            msg = "n_grid needs at least two values"
            raise SplurgeParameterError(msg, details=f"Got {grid}")
        n_max = grid[-1]

        centered = cls.center(rpf, f)
        decomposition = cls.martingale_coboundary(rpf, centered.sequence, count=n_max)
        curve = cls.moment_curve(rpf, f, n_max, q0=q0)
        variance = [curve.at(n)[1] for n in grid]
        partial = decomposition.var_a_partial_sums()

        converging = cls.tail_converges(decomposition.var_a)
        var_mid = variance[len(grid) // 2]
        var_max = variance[-1]
        slope, _, r2 = linear_trend(grid, variance)

        if converging and var_max <= 1.5 * var_mid + 1e-9:
            verdict = VarianceClass.BOUNDED
        elif var_max >= growth_threshold and slope > 0 and r2 >= cls.DEFAULT_R2 and not converging:
            verdict = VarianceClass.GROWING
        else:
            verdict = VarianceClass.INDETERMINATE

        logger.info("Variance of '%s': %s (sigma^2 at n=%d is %.4g)", f.name, verdict.value, n_max, var_max)
        return VarianceReport(
            verdict=verdict,
            n_grid=grid,
            variance=variance,
            var_a_partial_sums=[float(partial[n - 1]) for n in grid],
            evidence={
                "tail_converging": converging,
                "slope": slope,
                "r_squared": r2,
                "var_mid": var_mid,
                "var_max": var_max,
                "max_identity_residual": float(decomposition.identity_residual.max()),
                "max_martingale_residual": float(decomposition.martingale_residual.max()),
            },
        )


@dataclass
class ReducibleDecomposition:
    """
    f_j = c_j + M_j + g_j - g_{j+1} o T_j + a Z_j with L_hat_j M_j = 0 and integer Z_j.

    ``offset`` (c_j) may be omitted for the zero sequence. All parts are measured in units of
    the observable, so ``span`` is the lattice step a.
    """

    observable: FunctionSequence
    martingale: FunctionSequence
    coboundary: FunctionSequence
    lattice: FunctionSequence
    span: float
    offset: FunctionSequence | None = None

    IDENTITY_TOL: ClassVar[float] = 1e-9
    MARTINGALE_TOL: ClassVar[float] = 1e-8

    def validate(
        self,
        rpf: RpfData,
        count: int,
    ) -> np.ndarray:
        """
        Check every identity on [0, count) and return Var(M_j) for j < count.

        Raises:
            SplurgeDecompositionInvalidError: naming the failing identity and index
        """
        if self.span <= 0:
            msg = "Lattice span must be positive"
            raise SplurgeDecompositionInvalidError(msg, details=f"span={self.span}")
        depth = rpf.depth
        parts = [self.observable, self.martingale, self.coboundary, self.lattice]
        if self.offset is not None:
            parts.append(self.offset)
        if self.coboundary.depth > depth - 1:
            msg = "Coboundary part must be shallower than the working depth"
            raise SplurgeDecompositionInvalidError(msg, details=f"depth {self.coboundary.depth} >= {depth}")
        for part in parts:
            if part.depth > depth:
                msg = f"Decomposition part '{part.name}' is deeper than the working depth"
                raise SplurgeDecompositionInvalidError(msg, details=f"depth {part.depth} > {depth}")

        space = rpf.space
        var_m = np.empty(count)
        for j in range(count):
            mask = space.mask(j, depth)
            z = self.lattice.values(j, depth)
            if np.any(np.abs(z - np.round(z))[mask] > self.IDENTITY_TOL):
                msg = f"Lattice part is not integer-valued at j={j}"
                raise SplurgeDecompositionInvalidError(msg, details=f"identity=integer Z, j={j}")

            m = self.martingale.values(j, depth)
            g_next = self.coboundary.values(j + 1, depth - 1)
            shifted = np.broadcast_to(g_next[None, ...], mask.shape) * mask
            offset = self.offset.values(j, depth) if self.offset is not None else 0.0
            rebuilt = offset + m + self.coboundary.values(j, depth) - shifted + self.span * z
            gap = float(np.abs(self.observable.values(j, depth) - rebuilt)[mask].max())
            if gap > self.IDENTITY_TOL:
                msg = f"Reducible identity fails at j={j}"
                raise SplurgeDecompositionInvalidError(msg, details=f"identity=reconstruction, j={j}, residual={gap:.3g}")

            image = rpf.apply(j, np.asarray(m, dtype=np.float64))
            residual = float(np.abs(image)[space.mask(j + 1, depth)].max())
            if residual > self.MARTINGALE_TOL:
                msg = f"Martingale part is not annihilated at j={j}"
                raise SplurgeDecompositionInvalidError(msg, details=f"identity=L_hat M = 0, j={j}, residual={residual:.3g}")
            var_m[j] = float((m**2 * rpf.measure_weights(j)).sum())

        if var_m.max() > DecompositionHelper._TINY and not DecompositionHelper.tail_converges(var_m):
            msg = "Martingale variances are not summable"
            raise SplurgeDecompositionInvalidError(msg, details="identity=ratio test on Var(M_j)")
        return var_m
