"""
Twisted transfer operators, norm curves, resonance scans and temporal distances.

The twisted operator L_hat_{j,t} h = L_hat_j(e^{i t f_j} h) maps the depth-D_w subspace into
itself, so operator norms are measured on a finite trial set inside that subspace. A
frequency t is resonant when the trial norms stop decaying in n; resonances of a reducible
observable form an arithmetic progression whose step gives the lattice span.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from scipy import integrate, stats

from splurge_gibbs.decomp import DecompositionHelper, VarianceClass, VarianceReport
from splurge_gibbs.exceptions import (
    SplurgeGridTooCoarseError,
    SplurgeIndexOutOfWindowError,
    SplurgeNumericalWarning,
    SplurgeParameterError,
)
from splurge_gibbs.funcspace import (
    FiniteDepthFn,
    FunctionSequence,
    holder_seminorm_values,
    pad_values,
    star_norm_values,
)
from splurge_gibbs.random_helper import RandomHelper
from splurge_gibbs.symbolic import SymbolicHelper, ValidatedSystem, Word
from splurge_gibbs.transfer import RpfData

logger = logging.getLogger(__name__)


class LatticeClass(Enum):
    """Classification produced by the resonance scan."""

    IRREDUCIBLE_NONLATTICE = "IrreducibleNonlattice"
    LATTICE = "Lattice"
    VARIANCE_BOUNDED = "VarianceBounded"
    INDETERMINATE = "Indeterminate"


@dataclass
class NormCurve:
    """
    rho(t, n) = max over trial functions of ||L_hat_{0,t}^n p||_* / ||p||_*.

    ``rho`` and ``lower_bound`` have shape (len(t), len(n_grid)); the lower bound is the
    star norm of the image of the constant trial function.
    """

    t: np.ndarray
    n_grid: list[int]
    rho: np.ndarray
    lower_bound: np.ndarray
    sigma: np.ndarray
    delta: float = 0.0
    t_max: float = math.inf

    def integral(self) -> np.ndarray:
        """Trapezoid integral of rho(., n) over delta <= t <= t_max, one value per n."""
        keep = (self.t >= self.delta) & (self.t <= self.t_max)
        if int(keep.sum()) < 2:
            return np.zeros(len(self.n_grid))
        return integrate.trapezoid(self.rho[keep], self.t[keep], axis=0)

    def sigma_times_integral(self) -> np.ndarray:
        return self.sigma * self.integral()

    def to_rows(self) -> list[dict[str, float]]:
        rows: list[dict[str, float]] = []
        for a, t in enumerate(self.t):
            for b, n in enumerate(self.n_grid):
                rows.append(
                    {
                        "t": float(t),
                        "n": n,
                        "rho": float(self.rho[a, b]),
                        "lower_bound": float(self.lower_bound[a, b]),
                    }
                )
        return rows


@dataclass
class LatticeReport:
    t_grid: np.ndarray
    n_max: int
    rho: np.ndarray
    rho_half: np.ndarray
    lower_bound: np.ndarray
    resonant_t: list[float]
    span_a: float | None
    classification: LatticeClass
    threshold: float
    grid: float
    evidence: dict[str, Any] = field(default_factory=dict)

    @property
    def label(self) -> str:
        if self.classification is LatticeClass.LATTICE and self.span_a is not None:
            return f"Lattice(a={self.span_a:.6g})"
        return self.classification.value

    def to_rows(self) -> list[dict[str, float]]:
        rows: list[dict[str, float]] = []
        for k, t in enumerate(self.t_grid):
            rows.append({"t": float(t), "n": self.n_max // 2, "rho": float(self.rho_half[k]), "lower_bound": math.nan})
            rows.append(
                {"t": float(t), "n": self.n_max, "rho": float(self.rho[k]), "lower_bound": float(self.lower_bound[k])}
            )
        return rows

    def to_dict(self) -> dict[str, Any]:
        return {
            "classification": self.classification.value,
            "label": self.label,
            "span_a": self.span_a,
            "resonant_t": self.resonant_t,
            "threshold": self.threshold,
            "grid": self.grid,
            "n_max": self.n_max,
            "t_range": [float(self.t_grid[0]), float(self.t_grid[-1])] if self.t_grid.size else [],
            "evidence": self.evidence,
        }


@dataclass(frozen=True)
class LasotaYorkeConstants:
    c1: float
    theta1: float
    max_violation: float
    samples: int
    k_max: int


@dataclass(frozen=True)
class VarianceNormFit:
    slope: float
    intercept: float
    r_squared: float
    points: int


@dataclass(frozen=True)
class TemporalDistanceQuery:
    """
    Branch data of a temporal distance with gap.

    ``y1``, ``y2`` have length k at j; ``w1``, ``w2``, ``v1``, ``v2`` have length m at j+k;
    ``x1`` and ``x2`` are the tails x' and x'' at j+k+m.
    """

    j: int
    y1: tuple[int, ...]
    y2: tuple[int, ...]
    w1: tuple[int, ...]
    w2: tuple[int, ...]
    v1: tuple[int, ...]
    v2: tuple[int, ...]
    x1: tuple[int, ...]
    x2: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.y1)

    @property
    def m(self) -> int:
        return len(self.w1)

    @property
    def ell(self) -> int:
        return self.k + self.m

    def words(self) -> tuple[Word, Word, Word, Word]:
        """The four orbits y1 w1 x', y2 v1 x'', y1 w2 x'', y2 v2 x' in alternating-sign order."""
        if len({len(self.y1), len(self.y2)}) != 1 or len({len(self.w1), len(self.w2), len(self.v1), len(self.v2)}) != 1:
            msg = "Branch words of a query must share their lengths"
            raise SplurgeParameterError(
                msg,
                details=f"y: {len(self.y1)}/{len(self.y2)}, gaps: {[len(self.w1), len(self.w2), len(self.v1), len(self.v2)]}",
            )
        return (
            Word(self.j, self.y1 + self.w1 + self.x1),
            Word(self.j, self.y2 + self.v1 + self.x2),
            Word(self.j, self.y1 + self.w2 + self.x2),
            Word(self.j, self.y2 + self.v2 + self.x1),
        )


class SpectralHelper:
    """
    Twisted operators and lattice detection.

    Attributes:
        DEFAULT_TRIAL_COUNT (int): random complex trials added to the deterministic ones
        DEFAULT_THRESHOLD (float): resonance threshold on rho(t, n_max)
        DEFAULT_PERSISTENCE (float): minimal rho(t, n_max) / rho(t, n_max / 2) at a resonance
        DEFAULT_GRID (float): frequency grid spacing, also the coarsest accepted
        DEFAULT_T_CHUNK (int): frequencies processed together
    """

    DEFAULT_TRIAL_COUNT: int = 8
    DEFAULT_THRESHOLD: float = 0.2
    DEFAULT_PERSISTENCE: float = 0.99
    DEFAULT_GRID: float = 0.01
    DEFAULT_DELTA: float = 0.1
    DEFAULT_T_MAX: float = 14.0
    DEFAULT_N_MAX: int = 64
    DEFAULT_T_CHUNK: int = 128
    DEFAULT_ALPHA: float = 1.0
    DEFAULT_SEED: int = 0
    MAX_CYLINDER_DEPTH: int = 3
    GCD_TOL: float = 1e-6

    # Twisted operators

    @staticmethod
    def _phase(
        rpf: RpfData,
        f: FunctionSequence,
        j: int,
        ts: np.ndarray,
        batch_rank: int,
        rank: int,
    ) -> np.ndarray:
        """e^{i t f_j} with t on the leading axis and ``batch_rank - 1`` singleton batch axes."""
        f_values = pad_values(f.values(j, rpf.depth), rpf.depth, rpf.space.mask(j, rank))
        t_shape = ts.shape + (1,) * (batch_rank - 1 + rank)
        return np.exp(1j * ts.reshape(t_shape) * f_values)

    @classmethod
    def twisted_push(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        j: int,
        ts: np.ndarray,
        values: np.ndarray,
        *,
        table_rank: int | None = None,
    ) -> np.ndarray:
        """
        One twisted step for a frequency vector; ``values`` has t on axis 0.

        Further batch axes between the t axis and the word axes are carried along.
        """
        rank = table_rank or rpf.depth
        batch_rank = values.ndim - rank
        if batch_rank < 1 or values.shape[0] != ts.shape[0]:
            msg = "Twisted values need a leading frequency axis"
            raise SplurgeParameterError(msg, details=f"values {values.shape}, frequencies {ts.shape}")
        return rpf.apply(j, values * cls._phase(rpf, f, j, ts, batch_rank, rank), table_rank=rank)

    @classmethod
    def twisted_apply(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        j: int,
        t: float,
        h: FiniteDepthFn,
    ) -> FiniteDepthFn:
        """
        L_hat_{j,t} h = L_hat_j(e^{i t f_j} h).

        Example:
            iid fair coin, first-symbol, t = pi, h = 1 gives the constant 0.
        """
        if h.base != j:
            msg = "Function base does not match the operator index"
            raise SplurgeIndexOutOfWindowError(msg, details=f"function base {h.base}, operator index {j}")
        rank = max(rpf.depth, h.depth)
        values = pad_values(h.values, h.depth, rpf.space.mask(j, rank))
        image = cls.twisted_push(rpf, f, j, np.array([t]), values[None, ...], table_rank=rank)[0]

        bound = rpf.apply(j, np.abs(values), table_rank=rank)
        if float((np.abs(image) - bound).max()) > 1e-12 * (1.0 + float(bound.max())):
            warnings.warn(
                f"Twisted image exceeds the untwisted modulus bound at j={j}",
                SplurgeNumericalWarning,
                stacklevel=2,
            )
        return FiniteDepthFn(j + 1, image, rpf.space.mask(j + 1, image.ndim))

    # Norm curves

    @classmethod
    def trial_set(
        cls,
        rpf: RpfData,
        *,
        trial_count: int = DEFAULT_TRIAL_COUNT,
        seed: int = DEFAULT_SEED,
    ) -> np.ndarray:
        """Constant 1, cylinder indicators of depth min(D_w, 3) and seeded complex unit functions at j=0."""
        mask = rpf.space.mask(0, rpf.depth)
        cylinder_depth = min(rpf.depth, cls.MAX_CYLINDER_DEPTH)
        trials: list[np.ndarray] = [mask.astype(np.complex128)]
        for word in SymbolicHelper.enumerate_words(rpf.space.system, 0, cylinder_depth):
            indicator = np.zeros(rpf.space.mask(0, cylinder_depth).shape, dtype=np.complex128)
            indicator[word.symbols] = 1.0
            trials.append(pad_values(indicator, cylinder_depth, mask))
        rng = RandomHelper.generator(seed, stream=0)
        for _ in range(trial_count):
            trials.append(RandomHelper.complex_unit(mask.shape, rng=rng) * mask)
        return np.stack(trials)

    @classmethod
    def norm_curve(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        t_grid: np.ndarray | list[float],
        n_grid: list[int] | tuple[int, ...],
        *,
        trial_count: int = DEFAULT_TRIAL_COUNT,
        seed: int = DEFAULT_SEED,
        alpha: float = DEFAULT_ALPHA,
        c1: float = 1.0,
        delta: float = 0.0,
        t_max: float = math.inf,
        t_chunk: int = DEFAULT_T_CHUNK,
    ) -> NormCurve:
        """
        Trial-set operator norms of L_hat_{0,t}^n on the working-depth subspace.

        Each frequency is processed independently with a fixed summation order, so results
        do not depend on chunking.
        """
        ts = np.asarray(t_grid, dtype=np.float64)
        grid = sorted({int(n) for n in n_grid})
        if not grid or grid[0] < 1 or grid[-1] > rpf.horizon:
            msg = "n_grid must lie in [1, horizon]"
            raise SplurgeParameterError(msg, details=f"n_grid={grid}, horizon={rpf.horizon}")

        trials = cls.trial_set(rpf, trial_count=trial_count, seed=seed)
        mask0 = rpf.space.mask(0, rpf.depth)
        trial_norms = star_norm_values(trials, mask0, alpha, c1)
        rho = np.empty((ts.size, len(grid)))
        lower = np.empty((ts.size, len(grid)))
        wanted = {n: b for b, n in enumerate(grid)}

        for start in range(0, ts.size, max(1, t_chunk)):
            chunk = ts[start : start + t_chunk]
            values = np.broadcast_to(trials, (chunk.size,) + trials.shape).copy()
            for j in range(grid[-1]):
                values = cls.twisted_push(rpf, f, j, chunk, values)
                column = wanted.get(j + 1)
                if column is not None:
                    norms = star_norm_values(values, rpf.space.mask(j + 1, rpf.depth), alpha, c1)
                    rho[start : start + chunk.size, column] = (norms / trial_norms).max(axis=1)
                    lower[start : start + chunk.size, column] = norms[:, 0]

        curve = DecompositionHelper.moment_curve(rpf, f, grid[-1])
        sigma = np.array([curve.sigma(n) for n in grid])
        logger.debug("Norm curve of '%s': %d frequencies x %d lengths", f.name, ts.size, len(grid))
        return NormCurve(t=ts, n_grid=grid, rho=rho, lower_bound=lower, sigma=sigma, delta=delta, t_max=t_max)

    @classmethod
    def calibrate_lasota_yorke(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        *,
        t_values: list[float] | tuple[float, ...] = (0.0, 0.5, 1.0, 3.0),
        k_max: int = 32,
        samples: int = 100,
        seed: int = DEFAULT_SEED,
        alpha: float = DEFAULT_ALPHA,
    ) -> LasotaYorkeConstants:
        """
        Operational constants in G(L_hat_{0,t}^k h) <= C1 (||h||_inf + theta1^k G(h)).

        C1 is twice the largest k=1 quotient over the sample (at least 1); theta1 is the
        smallest rate making the inequality hold for every sampled h, t and k <= k_max.
        """
        if k_max > rpf.horizon:
            msg = "k_max exceeds the solved horizon"
            raise SplurgeParameterError(msg, details=f"k_max={k_max}, horizon={rpf.horizon}")
        mask0 = rpf.space.mask(0, rpf.depth)
        rng = RandomHelper.generator(seed, stream=1)
        h = (rng.standard_normal((samples,) + mask0.shape) + 1j * rng.standard_normal((samples,) + mask0.shape)) * mask0
        ts = np.asarray(t_values, dtype=np.float64)
        sup_h = np.abs(h).reshape(samples, -1).max(axis=1)
        g_h = holder_seminorm_values(h, mask0, alpha)

        seminorms = np.empty((k_max, ts.size, samples))
        values = np.broadcast_to(h, (ts.size,) + h.shape).copy()
        for k in range(k_max):
            values = cls.twisted_push(rpf, f, k, ts, values)
            seminorms[k] = holder_seminorm_values(values, rpf.space.mask(k + 1, rpf.depth), alpha)

        positive = g_h > 0
        quotient = seminorms[0] / (sup_h + g_h)
        c1 = max(2.0 * float(quotient.max()), 1.0)
        theta1 = 0.0
        for k in range(k_max):
            excess = np.maximum(seminorms[k] / c1 - sup_h, 0.0)
            ratio = np.where(positive, excess / np.where(positive, g_h, 1.0), 0.0)
            theta1 = max(theta1, float(ratio.max()) ** (1.0 / (k + 1)))

        violation = 0.0
        for k in range(k_max):
            bound = c1 * (sup_h + theta1 ** (k + 1) * g_h)
            violation = max(violation, float((seminorms[k] / bound).max()))
        logger.debug("Lasota-Yorke calibration: C1=%.4g theta1=%.4g max ratio %.4g", c1, theta1, violation)
        return LasotaYorkeConstants(c1=c1, theta1=theta1, max_violation=violation, samples=samples, k_max=k_max)

    @staticmethod
    def value_set(
        f: FunctionSequence,
        indices: range,
    ) -> np.ndarray:
        """Sorted distinct admissible values of f_j over the given indices."""
        collected = [f.native(j)[f.space.mask(j, f.depth)] for j in indices]
        values = np.round(np.concatenate(collected).real, 9)
        return np.unique(values)

    @classmethod
    def value_gcd(
        cls,
        values: np.ndarray,
        *,
        tol: float = GCD_TOL,
    ) -> float:
        """Largest g with every value difference in g * Z (within tol); 0 if all values agree."""
        diffs = np.unique(np.abs(np.asarray(values) - values[0]))
        g = 0.0
        for d in diffs:
            a, b = max(g, float(d)), min(g, float(d))
            while b > tol:
                a, b = b, math.fmod(a, b)
                if b > a - tol:
                    b = 0.0
            g = a
        return g

    @classmethod
    def resonance_scan(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        *,
        delta: float = DEFAULT_DELTA,
        t_max: float = DEFAULT_T_MAX,
        grid: float = DEFAULT_GRID,
        n_max: int = DEFAULT_N_MAX,
        threshold: float = DEFAULT_THRESHOLD,
        persistence: float = DEFAULT_PERSISTENCE,
        trial_count: int = DEFAULT_TRIAL_COUNT,
        seed: int = DEFAULT_SEED,
        variance: VarianceReport | None = None,
    ) -> LatticeReport:
        """
        Scan [delta, t_max] for resonant frequencies and classify the observable.

        Raises:
            SplurgeGridTooCoarseError: If the grid spacing exceeds 0.01
        """
        if grid > cls.DEFAULT_GRID + 1e-15:
            msg = f"Frequency grid spacing {grid} is coarser than {cls.DEFAULT_GRID}"
            raise SplurgeGridTooCoarseError(msg, details=f"grid={grid}")
        if not 0 < delta < t_max:
            msg = "Need 0 < delta < T"
            raise SplurgeParameterError(msg, details=f"delta={delta}, T={t_max}")

        report = variance or DecompositionHelper.classify_variance(rpf, f)
        t_grid = np.arange(delta, t_max + grid / 2, grid)
        if report.verdict is VarianceClass.BOUNDED:
            empty = np.zeros(0)
            return LatticeReport(
                t_grid=empty,
                n_max=n_max,
                rho=empty,
                rho_half=empty,
                lower_bound=empty,
                resonant_t=[],
                span_a=None,
                classification=LatticeClass.VARIANCE_BOUNDED,
                threshold=threshold,
                grid=grid,
                evidence={"variance": report.to_dict()},
            )

        half = max(1, n_max // 2)
        curve = cls.norm_curve(rpf, f, t_grid, (half, n_max), trial_count=trial_count, seed=seed)
        rho_half = curve.rho[:, 0]
        rho = curve.rho[:, -1]
        ratio = rho / np.maximum(rho_half, 1e-300)
        resonant = (rho > threshold) & (ratio >= persistence)

        peaks: list[float] = []
        indices = np.flatnonzero(resonant)
        if indices.size:
            clusters = np.split(indices, np.flatnonzero(np.diff(indices) > 1) + 1)
            peaks = [float(t_grid[c[np.argmax(rho[c])]]) for c in clusters]

        evidence: dict[str, Any] = {"variance_verdict": report.verdict.value, "peak_rho": [float(rho.max())]}
        span: float | None = None
        if not peaks:
            values = cls.value_set(f, range(n_max))
            g = cls.value_gcd(values)
            diffs = np.diff(values)
            smallest = float(diffs.min()) if diffs.size else math.inf
            required = 3.0 * 2.0 * math.pi / g if g >= 1e-3 else 2.0 * math.pi / smallest
            evidence.update({"value_gcd": g, "required_t_max": required})
            classification = (
                LatticeClass.IRREDUCIBLE_NONLATTICE if t_max >= required else LatticeClass.INDETERMINATE
            )
        else:
            t_min = min(peaks)
            ks = np.array([round(t / t_min) for t in peaks], dtype=np.float64)
            ts = np.array(peaks)
            t1 = float((ks * ts).sum() / (ks**2).sum())
            misfit = float(np.abs(ts - ks * t1).max())
            evidence.update({"t1": t1, "progression_misfit": misfit, "multiples": ks.astype(int).tolist()})
            if misfit <= grid + 1e-12:
                span = 2.0 * math.pi / t1
                classification = LatticeClass.LATTICE
            else:
                classification = LatticeClass.INDETERMINATE

        result = LatticeReport(
            t_grid=t_grid,
            n_max=n_max,
            rho=rho,
            rho_half=rho_half,
            lower_bound=curve.lower_bound[:, -1],
            resonant_t=peaks,
            span_a=span,
            classification=classification,
            threshold=threshold,
            grid=grid,
            evidence=evidence,
        )
        logger.info("Resonance scan of '%s': %s, resonances %s", f.name, result.label, [f"{t:.3f}" for t in peaks])
        return result

    @classmethod
    def variance_norm_fit(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        *,
        t_values: list[float] | tuple[float, ...] = (0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5),
        n_grid: list[int] | tuple[int, ...] = (8, 16, 32),
        trial_count: int = DEFAULT_TRIAL_COUNT,
        seed: int = DEFAULT_SEED,
    ) -> VarianceNormFit:
        """Least-squares line of -log rho(t, n) against t^2 sigma_n^2 at small t."""
        curve = cls.norm_curve(rpf, f, list(t_values), n_grid, trial_count=trial_count, seed=seed)
        x = (curve.t[:, None] ** 2) * (curve.sigma[None, :] ** 2)
        y = -np.log(np.maximum(curve.rho, 1e-300))
        fit = stats.linregress(x.ravel(), y.ravel())
        return VarianceNormFit(
            slope=float(fit.slope),
            intercept=float(fit.intercept),
            r_squared=float(fit.rvalue**2),
            points=int(x.size),
        )

    # Temporal distances

    @staticmethod
    def temporal_distance(
        f: FunctionSequence,
        query: TemporalDistanceQuery,
    ) -> float:
        """
        Alternating sum of four Birkhoff sums of length k+m along the query's orbits.

        Raises:
            SplurgeInadmissibleError: If one of the four words is not admissible
            SplurgeParameterError: If the tails are shorter than depth(f) - 1
        """
        system = f.space.system
        depth = f.depth
        if min(len(query.x1), len(query.x2)) < depth - 1:
            msg = "Tails are too short to resolve the observable"
            raise SplurgeParameterError(msg, details=f"need tails of length >= {depth - 1}")
        ell = query.ell
        signs = (1.0, 1.0, -1.0, -1.0)
        total = 0.0
        for sign, word in zip(signs, query.words(), strict=True):
            system.require_admissible(word)
            birkhoff = sum(float(f.native(word.base + i)[word.symbols[i : i + depth]].real) for i in range(ell))
            total += sign * birkhoff
        return total

    @staticmethod
    def lattice_residual(
        samples: list[float] | np.ndarray,
        t: float,
    ) -> float:
        """
        Largest distance of a sample to the lattice (2 pi / t) Z.

        Example:
            a single sample pi / t has residual pi / t.
        """
        if t == 0:
            msg = "Frequency must be nonzero"
            raise SplurgeParameterError(msg, details="t=0")
        values = np.asarray(samples, dtype=np.float64)
        if values.size == 0:
            return 0.0
        period = 2.0 * math.pi / abs(t)
        remainder = np.mod(values, period)
        return float(np.minimum(remainder, period - remainder).max())

    @classmethod
    def random_queries(
        cls,
        system: ValidatedSystem,
        *,
        j: int,
        k: int,
        m: int,
        count: int,
        tail_length: int,
        seed: int = DEFAULT_SEED,
        max_attempts: int = 64,
    ) -> list[TemporalDistanceQuery]:
        """Seeded admissible queries; tails are forced to follow both branch ends they attach to."""
        queries: list[TemporalDistanceQuery] = []
        for index in range(count):
            rng = RandomHelper.generator(seed, stream=index)
            for _ in range(max_attempts):
                query = cls._draw_query(system, j, k, m, tail_length, rng)
                if query is not None:
                    queries.append(query)
                    break
            else:
                msg = "Could not draw an admissible temporal-distance query"
                raise SplurgeParameterError(msg, details=f"j={j}, k={k}, m={m}, attempts={max_attempts}")
        return queries

    @staticmethod
    def _draw_query(
        system: ValidatedSystem,
        j: int,
        k: int,
        m: int,
        tail_length: int,
        rng: np.random.Generator,
    ) -> TemporalDistanceQuery | None:
        y1 = RandomHelper.random_walk(system, j, k, rng=rng)
        y2 = RandomHelper.random_walk(system, j, k, rng=rng)
        gap_start = j + k
        w1 = RandomHelper.random_walk(system, gap_start, m, rng=rng, after=y1[-1] if y1 else None)
        w2 = RandomHelper.random_walk(system, gap_start, m, rng=rng, after=y1[-1] if y1 else None)
        v1 = RandomHelper.random_walk(system, gap_start, m, rng=rng, after=y2[-1] if y2 else None)
        v2 = RandomHelper.random_walk(system, gap_start, m, rng=rng, after=y2[-1] if y2 else None)

        tail_start = gap_start + m
        ends_1 = [b[-1] for b in (w1 or y1, v2 or y2) if b]
        ends_2 = [b[-1] for b in (v1 or y2, w2 or y1) if b]
        tails: list[tuple[int, ...]] = []
        for ends in (ends_1, ends_2):
            allowed = np.ones(system.alphabet_size(tail_start), dtype=bool)
            for symbol in ends:
                allowed &= system.adjacency(tail_start - 1)[symbol]
            choices = np.flatnonzero(allowed)
            if choices.size == 0:
                return None
            first = int(rng.choice(choices))
            rest = RandomHelper.random_walk(system, tail_start + 1, tail_length - 1, rng=rng, after=first)
            tails.append((first,) + rest)
        return TemporalDistanceQuery(j=j, y1=y1, y2=y2, w1=w1, w2=w2, v1=v1, v2=v2, x1=tails[0], x2=tails[1])

    @classmethod
    def residual_curve(
        cls,
        f: FunctionSequence,
        t: float,
        *,
        j: int = 0,
        k: int = 2,
        gaps: list[int] | tuple[int, ...] = (1, 2, 4, 8),
        count: int = 32,
        seed: int = DEFAULT_SEED,
    ) -> list[dict[str, float]]:
        """Lattice residual at t of random temporal distances, one row per gap length."""
        rows: list[dict[str, float]] = []
        for m in gaps:
            queries = cls.random_queries(
                f.space.system, j=j, k=k, m=m, count=count, tail_length=max(1, f.depth - 1), seed=seed
            )
            samples = [cls.temporal_distance(f, q) for q in queries]
            rows.append({"ell": float(k + m), "gap": float(m), "residual": cls.lattice_residual(samples, t)})
        return rows

