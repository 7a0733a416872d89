"""
Model constructors and the named model zoo.

Constructors turn familiar dynamical data (Markov chains, products of positive matrices,
piecewise-linear Markov interval maps, two-sided observables) into validated sequential
SFTs with finite-depth potentials and observables that the operator layers consume.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from splurge_gibbs.artifact_io import read_json
from splurge_gibbs.common_utils import (
    as_float_array,
    safe_dict_access,
    validate_positive,
    validate_probability_vector,
)
from splurge_gibbs.decomp import ReducibleDecomposition
from splurge_gibbs.exceptions import (
    SplurgeDecompositionInvalidError,
    SplurgeIncompatibleReferencePastError,
    SplurgeNotEllipticError,
    SplurgeNotExpandingError,
    SplurgeNotMarkovError,
    SplurgeNotPositiveError,
    SplurgeNotStochasticError,
    SplurgeParameterError,
    SplurgeShapeMismatchError,
)
from splurge_gibbs.funcspace import FunctionSequence, FunctionSpace
from splurge_gibbs.symbolic import ExtensionRule, SymbolicHelper, SystemSpec, ValidatedSystem, Word
from splurge_gibbs.transfer import RpfData, TransferHelper

logger = logging.getLogger(__name__)


def _safe_log(values: np.ndarray) -> np.ndarray:
    positive = values > 0
    return np.where(positive, np.log(np.where(positive, values, 1.0)), 0.0)


@dataclass
class Model:
    """A validated system with its potential, an observable and optional certified data."""

    name: str
    system: ValidatedSystem
    space: FunctionSpace
    potential: FunctionSequence
    observable: FunctionSequence
    decomposition: ReducibleDecomposition | None = None
    chain: MarkovChain | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def working_depth(self) -> int:
        depths = [self.potential.depth, self.observable.depth]
        if self.decomposition is not None:
            depths.append(self.decomposition.coboundary.depth + 1)
        return TransferHelper.working_depth(*depths)

    def solve(
        self,
        *,
        horizon: int | None = None,
        tol: float = TransferHelper.DEFAULT_TOL,
        k_cap: int = TransferHelper.DEFAULT_K_CAP,
    ) -> RpfData:
        return TransferHelper.rpf_solve(
            self.space,
            self.potential,
            depth=self.working_depth,
            horizon=horizon,
            tol=tol,
            k_cap=k_cap,
        )

    def with_observable(
        self,
        observable: FunctionSequence,
        *,
        name: str | None = None,
    ) -> Model:
        return Model(
            name=name or self.name,
            system=self.system,
            space=self.space,
            potential=self.potential,
            observable=observable,
            chain=self.chain,
            metadata=dict(self.metadata),
        )


@dataclass
class MarkovChain:
    """
    Non-stationary Markov chain p_0, ..., p_{N-1} with initial law on symbols at 0.

    Transitions outside the window follow the system's extension rule.
    """

    system: ValidatedSystem
    transitions: tuple[np.ndarray, ...]
    initial: np.ndarray
    _marginals: list[np.ndarray] = field(default_factory=list, repr=False)

    def transition(self, j: int) -> np.ndarray:
        return self.transitions[self.system.transition_index(j)]

    def marginal(self, j: int) -> np.ndarray:
        """One-time law of the chain at j >= 0."""
        if j < 0:
            msg = "Chain marginals are defined from the initial index on"
            raise SplurgeParameterError(msg, details=f"Got j={j}")
        if not self._marginals:
            self._marginals.append(self.initial)
        while len(self._marginals) <= j:
            k = len(self._marginals) - 1
            self._marginals.append(self._marginals[k] @ self.transition(k))
        return self._marginals[j]

    def path_probability(self, word: Word) -> float:
        """P(x_j = s_0, ..., x_{j+L-1} = s_{L-1}) under the chain."""
        mass = float(self.marginal(word.base)[word.symbols[0]])
        for k in range(len(word) - 1):
            mass *= float(self.transition(word.base + k)[word.symbols[k], word.symbols[k + 1]])
        return mass


@dataclass
class CocycleData:
    """
    Sequential Perron-Frobenius data of a positive matrix product.

    With Xi_{j,n} = B_{j+n-1} ... B_j: B_j h_j = lambda_j h_{j+1}, nu_{j+1} B_j = lambda_j nu_j,
    |h_j|_1 = 1 and nu_j . h_j = 1.
    """

    lambdas: np.ndarray
    h: list[np.ndarray]
    nu: list[np.ndarray]
    decay_distances: np.ndarray
    decay_ratio: float
    gap_constant: float

    @property
    def log_lambdas(self) -> np.ndarray:
        return np.log(self.lambdas)

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": self.lambdas.tolist(),
            "pi": self.log_lambdas.tolist(),
            "decay_ratio": self.decay_ratio,
            "gap_constant": self.gap_constant,
            "decay_distances": self.decay_distances.tolist(),
        }


@dataclass(frozen=True)
class IntervalMap:
    """
    Piecewise-linear Markov interval map tau_j: [0, 1] -> [0, 1] per index.

    ``breakpoints[j]`` partitions [0, 1] into the cells I_{j,k}; ``images[j][k]`` is the
    interval [a, b] onto which tau_j maps I_{j,k} linearly.
    """

    breakpoints: tuple[np.ndarray, ...]
    images: tuple[np.ndarray, ...]

    @classmethod
    def from_dict(
        cls,
        data: dict[str, Any],
    ) -> IntervalMap:
        """
        Example:
            {"breakpoints": [[0, 0.5, 1], [0, 0.5, 1]], "images": [[[0, 1], [0, 1]]]}
        """
        raw_breakpoints = safe_dict_access(data, "breakpoints", item_name="interval map field")
        raw_images = safe_dict_access(data, "images", item_name="interval map field")
        breakpoints = tuple(as_float_array(b, param_name="breakpoints", ndim=1) for b in raw_breakpoints)
        images = tuple(as_float_array(i, param_name="images", ndim=2) for i in raw_images)
        return cls(breakpoints=breakpoints, images=images)

    def cell_lengths(self, j: int) -> np.ndarray:
        return np.diff(self.breakpoints[j])

    def slopes(self, j: int) -> np.ndarray:
        image = self.images[j]
        return (image[:, 1] - image[:, 0]) / self.cell_lengths(j)


class TwoSidedFn:
    """
    Sequence psi_j of functions of the coordinates j-P, ..., j+F.

    The builder returns the value tensor of psi_j over words of length P+F+1 starting at
    j-P; inadmissible entries are ignored.
    """

    def __init__(
        self,
        system: ValidatedSystem,
        builder: Callable[[int], np.ndarray],
        *,
        past: int,
        future: int,
        name: str = "psi",
    ) -> None:
        if past < 0 or future < 0:
            msg = "Past and future depths must be >= 0"
            raise SplurgeParameterError(msg, details=f"past={past}, future={future}")
        self._system = system
        self._builder = builder
        self.past = past
        self.future = future
        self.name = name
        self._cache: dict[int, np.ndarray] = {}

    @property
    def span(self) -> int:
        return self.past + self.future + 1

    def values(self, j: int) -> np.ndarray:
        cached = self._cache.get(j)
        if cached is not None:
            return cached
        mask = self._system.mask(j - self.past, self.span)
        raw = np.asarray(self._builder(j), dtype=np.float64)
        if raw.shape != mask.shape:
            msg = f"Two-sided builder '{self.name}' returned the wrong shape at j={j}"
            raise SplurgeShapeMismatchError(msg, details=f"Expected {mask.shape}, got {raw.shape}")
        values = np.where(mask, raw, 0.0)
        self._cache[j] = values
        return values


@dataclass
class SinaiReduction:
    """psi_j = u_j - u_{j+1} o sigma + phi_j o pi_j with one-sided phi of depth P+F+1."""

    psi: TwoSidedFn
    phi: FunctionSequence
    u: TwoSidedFn
    reference: tuple[int, ...]

    def identity_residual(
        self,
        indices: Sequence[int] | range,
    ) -> float:
        """Largest |psi_j - u_j + u_{j+1} - phi_j| over all admissible words covering every support."""
        system = self.phi.space.system
        p, f = self.psi.past, self.psi.future
        worst = 0.0
        for j in indices:
            start = j - p
            length = 2 * p + f + 1
            words = np.argwhere(system.mask(start, length))

            def at(table: np.ndarray, offset: int, words: np.ndarray = words) -> np.ndarray:
                return table[tuple(words[:, offset + k] for k in range(table.ndim))]

            psi = at(self.psi.values(j), 0)
            u_here = at(self.u.values(j), 0)
            u_next = at(self.u.values(j + 1), 1)
            phi = at(self.phi.native(j), p)
            worst = max(worst, float(np.abs(psi - u_here + u_next - phi).max()))
        return worst


class ModelHelper:
    """
    Constructors for the model families.

    Attributes:
        DEFAULT_EPSILON (float): smallest admissible positive transition probability
        DEFAULT_M_CHECK (int): largest step at which ellipticity is checked
        DEFAULT_COCYCLE_BURN_IN (int): power-iteration steps on each side of a cocycle index
        DEFAULT_DECAY_STEPS (int): products used to measure the cocycle decay ratio
        MARKOV_TOL (float): tolerance for interval endpoints to match breakpoints
    """

    DEFAULT_EPSILON: float = 1e-3
    DEFAULT_M_CHECK: int = 16
    STOCHASTIC_TOL: float = 1e-9
    DEFAULT_COCYCLE_BURN_IN: int = 100
    DEFAULT_DECAY_STEPS: int = 30
    MARKOV_TOL: float = 1e-12
    DEFAULT_COCYCLE_DEPTH: int = 3
    TRUNCATION_STEP: int = 2

    # Markov chains

    @classmethod
    def _check_elliptic(
        cls,
        system: ValidatedSystem,
        transitions: tuple[np.ndarray, ...],
        *,
        m_check: int,
    ) -> tuple[int, float]:
        starts = range(-system.extension.period, system.n_transitions)
        for m in range(m_check + 1):
            products = []
            for s in starts:
                product = transitions[system.transition_index(s)]
                for k in range(1, m + 1):
                    product = product @ transitions[system.transition_index(s + k)]
                products.append(product)
            if all(bool((p > 0).all()) for p in products):
                return m, float(min(p.min() for p in products))
        msg = f"Chain is not uniformly elliptic up to M_check={m_check}"
        raise SplurgeNotEllipticError(msg, details="some multi-step transition probability stays zero")

    @classmethod
    def from_markov_chain(
        cls,
        transitions: Sequence[Any],
        initial: Any,
        *,
        m_check: int = DEFAULT_M_CHECK,
        epsilon: float = DEFAULT_EPSILON,
        normalize: bool = True,
        extension: ExtensionRule | None = None,
        name: str = "markov",
    ) -> Model:
        """
        Model whose Gibbs family is the path law of a non-stationary Markov chain.

        The normalized potential is ln p_j(x_0, x_1) + ln pi_j(x_0) - ln pi_{j+1}(x_1) with pi_j
        the chain marginals, which gives lambda_j = 1 and h_j = 1; left of the initial index
        the potential is the uniform backward kernel. ``normalize=False`` keeps the raw ln p_j.

        Raises:
            SplurgeNotStochasticError: If a matrix is not row-stochastic or the initial law is invalid
            SplurgeNotEllipticError: If positive entries fall below epsilon or multi-step
                transitions never become positive

        Example:
            p = [[0.7, 0.3], [0.4, 0.6]] with initial (0.5, 0.5) gives mu_0([01]) = 0.15.
        """
        matrices = tuple(as_float_array(p, param_name="transition", ndim=2) for p in transitions)
        if not matrices:
            msg = "At least one transition matrix is required"
            raise SplurgeNotStochasticError(msg, details="Got an empty list")
        for j, p in enumerate(matrices):
            if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > cls.STOCHASTIC_TOL):
                msg = f"Transition matrix p_{j} is not row-stochastic"
                raise SplurgeNotStochasticError(msg, details=f"row sums {p.sum(axis=1).tolist()}")
            positive = p[p > 0]
            if positive.min() < epsilon:
                msg = f"Transition matrix p_{j} has a positive entry below epsilon"
                raise SplurgeNotEllipticError(msg, details=f"min positive {positive.min():.3g} < {epsilon}")
        try:
            rho = validate_probability_vector(initial, param_name="initial")
        except SplurgeParameterError as e:
            raise SplurgeNotStochasticError(e.message, details=e.details) from e
        if np.any(rho <= 0):
            msg = "Initial law must charge every symbol"
            raise SplurgeNotEllipticError(msg, details=f"initial={rho.tolist()}")

        sizes = tuple(p.shape[0] for p in matrices) + (matrices[-1].shape[1],)
        spec = SystemSpec(
            alphabet_sizes=sizes,
            adjacency=tuple((p > 0).astype(np.int64) for p in matrices),
            extension=extension or ExtensionRule(ExtensionRule.PERIODIC, len(matrices)),
        )
        system = SymbolicHelper.validate(spec)
        if rho.size != sizes[0]:
            msg = "Initial law does not match the alphabet at index 0"
            raise SplurgeShapeMismatchError(msg, details=f"initial size {rho.size}, d_0={sizes[0]}")
        steps, epsilon0 = cls._check_elliptic(system, matrices, m_check=m_check)

        chain = MarkovChain(system=system, transitions=matrices, initial=rho)
        space = FunctionSpace(system)

        def potential(j: int) -> np.ndarray:
            p = chain.transition(j)
            log_p = _safe_log(p)
            if not normalize:
                return log_p
            if j < 0:
                predecessors = system.adjacency(j).sum(axis=0)
                return np.broadcast_to(-np.log(predecessors)[None, :], p.shape).copy()
            return log_p + np.log(chain.marginal(j))[:, None] - np.log(chain.marginal(j + 1))[None, :]

        phi = space.sequence(potential, depth=2, name="log-transition")
        logger.debug("Markov model '%s': %d transitions, elliptic at M=%d", name, len(matrices), steps)
        return Model(
            name=name,
            system=system,
            space=space,
            potential=phi,
            observable=space.named_sequence("first_symbol"),
            chain=chain,
            metadata={
                "family": "markov",
                "normalized": normalize,
                "ellipticity_step": steps,
                "ellipticity_epsilon": epsilon0,
            },
        )

    @staticmethod
    def markov_identification_residual(
        model: Model,
        rpf: RpfData,
        *,
        max_length: int = 5,
        indices: Sequence[int] = (0, 1, 2),
    ) -> float:
        """max |mu_j([w]) - P([w])| over all cylinders of length <= max_length at the given indices."""
        if model.chain is None:
            msg = f"Model '{model.name}' carries no Markov chain"
            raise SplurgeParameterError(msg, details="build it with from_markov_chain")
        worst = 0.0
        for j in indices:
            for length in range(1, max_length + 1):
                for word in SymbolicHelper.enumerate_words(model.system, j, length):
                    gap = abs(TransferHelper.gibbs_cylinder(rpf, word) - model.chain.path_probability(word))
                    worst = max(worst, gap)
        return worst

    @staticmethod
    def linear_statistic(
        model: Model,
        coeffs: Sequence[float],
        *,
        tail_ratio: float | None = None,
    ) -> tuple[FunctionSequence, float | None]:
        """
        f_j(x) = sum_{k<D} a_k x_{j+k} as a depth-D sequence.

        When ``tail_ratio`` r < 1 is given, the dropped coefficients are assumed to satisfy
        |a_k| <= |a_{D-1}| r^{k-D+1} and the truncation bound sum_{k>=D} |a_k| * max symbol is
        returned alongside.

        Raises:
            SplurgeDepthOverflowError: If len(coeffs) exceeds the depth cap
        """
        if not coeffs:
            msg = "A linear statistic needs at least one coefficient"
            raise SplurgeParameterError(msg, details="Got an empty list")
        space = model.space
        space.check_depth(len(coeffs))
        values = [float(a) for a in coeffs]
        sequence = space.stationary(lambda j: space.linear(j, values), name=f"linear:{','.join(map(str, values))}")

        bound = None
        if tail_ratio is not None:
            if not 0 <= tail_ratio < 1:
                msg = "Tail ratio must be in [0, 1)"
                raise SplurgeParameterError(msg, details=f"Got {tail_ratio}")
            max_symbol = max(model.system.alphabet_size(j) for j in range(model.system.n_transitions + 1)) - 1
            bound = abs(values[-1]) * tail_ratio / (1.0 - tail_ratio) * max_symbol
        return sequence, bound

    # Matrix cocycles

    @classmethod
    def positive_matrix_cocycle(
        cls,
        matrices: Sequence[Any],
        *,
        window: int | None = None,
        burn_in: int = DEFAULT_COCYCLE_BURN_IN,
        decay_steps: int = DEFAULT_DECAY_STEPS,
    ) -> CocycleData:
        """
        Sequential Perron-Frobenius data of B_0, B_1, ... (extended periodically).

        Raises:
            SplurgeNotPositiveError: If an entry is not strictly positive
            SplurgeShapeMismatchError: If consecutive matrices cannot be multiplied
        """
        mats = [as_float_array(b, param_name="matrix", ndim=2) for b in matrices]
        if not mats:
            msg = "At least one matrix is required"
            raise SplurgeParameterError(msg, details="Got an empty list")
        period = len(mats)
        for j, b in enumerate(mats):
            if np.any(b <= 0):
                msg = f"Matrix B_{j} has a non-positive entry"
                raise SplurgeNotPositiveError(msg, details=f"min entry {b.min():.3g}")
            following = mats[(j + 1) % period]
            if following.shape[1] != b.shape[0]:
                msg = f"Matrices B_{j} and B_{j + 1} cannot be chained"
                raise SplurgeShapeMismatchError(msg, details=f"{b.shape} then {following.shape}")

        def at(j: int) -> np.ndarray:
            return mats[j % period]

        count = max(window or period, decay_steps)
        h: list[np.ndarray] = []
        nu: list[np.ndarray] = []
        for j in range(count + 1):
            v = np.ones(at(j - burn_in).shape[1])
            for i in range(j - burn_in, j):
                v = at(i) @ v
                v = v / v.sum()
            h.append(v)

            w = np.ones(at(j + burn_in - 1).shape[0])
            for i in range(j + burn_in - 1, j - 1, -1):
                w = w @ at(i)
                w = w / w.sum()
            nu.append(w / float(w @ v))

        lambdas = np.array([float((at(j) @ h[j]).sum()) for j in range(count)])

        distances = np.empty(decay_steps)
        product = np.eye(at(0).shape[1])
        log_scale = 0.0
        for n in range(1, decay_steps + 1):
            product = at(n - 1) @ product
            log_scale += math.log(lambdas[n - 1])
            diff = product / math.exp(log_scale) - np.outer(h[n], nu[0])
            distances[n - 1] = float(np.linalg.norm(diff, 2))
        usable = np.flatnonzero(distances > 1e-13)
        if usable.size >= 2:
            slope, _ = np.polyfit(usable.astype(np.float64), np.log(distances[usable]), 1)
            ratio = float(math.exp(slope))
        else:
            ratio = 0.0

        gap = 0.0
        product = np.eye(at(0).shape[1])
        log_norm = 0.0
        for n in range(1, count + 1):
            product = at(n - 1) @ product
            scale = float(np.linalg.norm(product, 2))
            log_norm += math.log(scale)
            product = product / scale
            gap = max(gap, abs(log_norm - float(np.log(lambdas[:n]).sum())))

        logger.debug("Cocycle: period=%d, decay ratio %.4g, gap %.4g", period, ratio, gap)
        return CocycleData(
            lambdas=lambdas,
            h=h,
            nu=nu,
            decay_distances=distances,
            decay_ratio=ratio,
            gap_constant=gap,
        )

    @classmethod
    def driven_cocycle_observable(
        cls,
        space: FunctionSpace,
        symbol_matrices: Sequence[Any],
        *,
        depth: int = DEFAULT_COCYCLE_DEPTH,
    ) -> tuple[FunctionSequence, float]:
        """
        Growth rate of a cocycle driven by the symbolic path, truncated to a depth-D function.

        f_j(x) = ln |1^T B(x_{j+D-1}) ... B(x_j)|_1 - ln |1^T B(x_{j+D-1}) ... B(x_{j+1})|_1;
        its Birkhoff sums track ln |Xi_{0,n}| up to a bounded error. The second return value is
        the largest change of f_j when the truncation depth grows by TRUNCATION_STEP.
        """
        mats = [as_float_array(b, param_name="matrix", ndim=2) for b in symbol_matrices]
        if any(np.any(b <= 0) for b in mats):
            msg = "Driven cocycle matrices must be entrywise positive"
            raise SplurgeNotPositiveError(msg, details="check every symbol matrix")
        if len({b.shape for b in mats}) != 1 or mats[0].shape[0] != mats[0].shape[1]:
            msg = "Driven cocycle matrices must be square and of equal size"
            raise SplurgeShapeMismatchError(msg, details=f"shapes {[b.shape for b in mats]}")
        if depth < 2:
            msg = "Driven cocycle observables need depth >= 2"
            raise SplurgeParameterError(msg, details=f"Got depth={depth}")
        system = space.system
        space.check_depth(depth + cls.TRUNCATION_STEP)
        size = mats[0].shape[0]

        def growth(words: np.ndarray) -> np.ndarray:
            return np.array([cls._log_ratio(word, mats) for word in words])

        def builder(j: int) -> np.ndarray:
            mask = system.mask(j, depth)
            words = np.argwhere(mask)
            values = np.zeros(mask.shape)
            values[tuple(words.T)] = growth(words)
            return values

        sequence = space.sequence(builder, depth=depth, name=f"cocycle-growth-D{depth}")

        error = 0.0
        for j in range(system.n_transitions + system.extension.period):
            longer = np.argwhere(system.mask(j, depth + cls.TRUNCATION_STEP))
            exact = growth(longer)
            short = sequence.native(j)[tuple(longer[:, :depth].T)]
            error = max(error, float(np.abs(exact - short).max()))
        return sequence, error

    @staticmethod
    def _log_ratio(
        word: np.ndarray,
        mats: list[np.ndarray],
    ) -> float:
        """ln |1^T B(w_{L-1})...B(w_0)|_1 - ln |1^T B(w_{L-1})...B(w_1)|_1."""
        u = np.full(mats[0].shape[0], 1.0 / mats[0].shape[0])
        for k in range(word.size - 1, 0, -1):
            u = u @ mats[int(word[k]) % len(mats)]
            u = u / u.sum()
        return math.log(float((u @ mats[int(word[0]) % len(mats)]).sum()))

    # Interval maps

    @classmethod
    def pw_linear_markov_map(
        cls,
        interval_map: IntervalMap,
        *,
        extension: ExtensionRule | None = None,
        name: str = "interval-map",
    ) -> Model:
        """
        Symbolic model of a piecewise-linear Markov map with potential -ln |slope|.

        A^(j)_{k,l} = 1 exactly when I_{j+1,l} is contained in tau_j(I_{j,k}).

        Raises:
            SplurgeNotMarkovError: If an image endpoint is not a breakpoint of the next partition
            SplurgeNotExpandingError: If some |slope| <= 1
        """
        n = len(interval_map.images)
        if len(interval_map.breakpoints) != n + 1:
            msg = "An interval map needs one more partition than maps"
            raise SplurgeShapeMismatchError(msg, details=f"{len(interval_map.breakpoints)} partitions, {n} maps")
        for j, points in enumerate(interval_map.breakpoints):
            if points[0] != 0.0 or points[-1] != 1.0 or np.any(np.diff(points) <= 0):
                msg = f"Partition {j} must increase from 0 to 1"
                raise SplurgeParameterError(msg, details=f"breakpoints {points.tolist()}")

        adjacency: list[np.ndarray] = []
        for j in range(n):
            image = interval_map.images[j]
            cells = interval_map.cell_lengths(j).size
            if image.shape != (cells, 2):
                msg = f"Map {j} needs one image interval per cell"
                raise SplurgeShapeMismatchError(msg, details=f"Expected {(cells, 2)}, got {image.shape}")
            following = interval_map.breakpoints[j + 1]
            matrix = np.zeros((cells, following.size - 1), dtype=np.int64)
            for k, (lo, hi) in enumerate(image):
                ends = [int(np.argmin(np.abs(following - x))) for x in (lo, hi)]
                if any(abs(following[e] - x) > cls.MARKOV_TOL for e, x in zip(ends, (lo, hi), strict=True)):
                    msg = f"Image of cell {k} under map {j} is not a union of partition cells"
                    raise SplurgeNotMarkovError(msg, details=f"image [{lo}, {hi}]")
                matrix[k, ends[0] : ends[1]] = 1
            slopes = np.abs(interval_map.slopes(j))
            if slopes.min() <= 1.0:
                msg = f"Map {j} is not expanding"
                raise SplurgeNotExpandingError(msg, details=f"min |slope| {slopes.min():.6g}")
            adjacency.append(matrix)

        spec = SystemSpec(
            alphabet_sizes=tuple(b.size - 1 for b in interval_map.breakpoints),
            adjacency=tuple(adjacency),
            extension=extension or ExtensionRule(ExtensionRule.PERIODIC, n),
        )
        system = SymbolicHelper.validate(spec)
        space = FunctionSpace(system)
        phi = space.sequence(
            lambda j: -np.log(np.abs(interval_map.slopes(system.transition_index(j)))),
            depth=1,
            name="log-derivative",
        )
        return Model(
            name=name,
            system=system,
            space=space,
            potential=phi,
            observable=space.named_sequence("first_symbol"),
            metadata={"family": "interval_map", "cell_lengths": [interval_map.cell_lengths(j).tolist() for j in range(n + 1)]},
        )

    # Sinai reduction

    @staticmethod
    def _reference_symbol(
        reference: tuple[int, ...],
        offset: int,
    ) -> int:
        return reference[(offset - 1) % len(reference)]

    @classmethod
    def default_reference_past(
        cls,
        system: ValidatedSystem,
    ) -> tuple[int, ...]:
        """Least constant past c c c ... that is admissible and precedes every symbol."""
        for c in range(min(system.alphabet_size(j) for j in range(-system.extension.period, system.n_transitions + 1))):
            try:
                cls._check_reference(system, (c,), past=1)
            except SplurgeIncompatibleReferencePastError:
                continue
            return (c,)
        msg = "No constant reference past is compatible with the system"
        raise SplurgeIncompatibleReferencePastError(msg, details="supply reference_past explicitly")

    @classmethod
    def _check_reference(
        cls,
        system: ValidatedSystem,
        reference: tuple[int, ...],
        *,
        past: int,
    ) -> None:
        depth = max(past, 1) + len(reference)
        for j in range(-system.extension.period, system.n_transitions + system.extension.period):
            for m in range(1, depth + 1):
                symbol = cls._reference_symbol(reference, m)
                if symbol >= system.alphabet_size(j - m):
                    msg = f"Reference past symbol {symbol} does not exist at index {j - m}"
                    raise SplurgeIncompatibleReferencePastError(msg, details=f"junction index {j}")
                if m > 1 and not system.adjacency(j - m)[symbol, cls._reference_symbol(reference, m - 1)]:
                    msg = f"Reference past is not admissible at index {j - m}"
                    raise SplurgeIncompatibleReferencePastError(msg, details=f"reference={reference}")
            junction = system.adjacency(j - 1)[cls._reference_symbol(reference, 1)]
            if not junction.all():
                msg = f"Reference past cannot precede every symbol at index {j}"
                raise SplurgeIncompatibleReferencePastError(
                    msg,
                    details=f"symbol {cls._reference_symbol(reference, 1)} -> {np.flatnonzero(~junction).tolist()}",
                )

    @classmethod
    def sinai_reduce(
        cls,
        space: FunctionSpace,
        psi: TwoSidedFn,
        *,
        reference_past: Sequence[int] | None = None,
    ) -> SinaiReduction:
        """
        One-sided phi and transfer function u with psi_j = u_j - u_{j+1} o sigma + phi_j o pi_j.

        ``reference_past`` lists the symbols at j-1, j-2, ... and repeats periodically.
        u_j(x) = sum_{k<P} [psi_{j+k}(x) - psi_{j+k}(a_j x)] where a_j x has its past replaced,
        and phi_j(x) = psi_j(a_j x) + sum_{1<=k<=P} [psi_{j+k}(a_j x) - psi_{j+k}(a_{j+1} x)].

        Raises:
            SplurgeIncompatibleReferencePastError: If the reference past fails a junction check
        """
        system = space.system
        p, f = psi.past, psi.future
        if reference_past is None:
            reference = cls.default_reference_past(system)
        else:
            reference = tuple(int(s) for s in reference_past)
            if not reference:
                msg = "Reference past must hold at least one symbol"
                raise SplurgeIncompatibleReferencePastError(msg, details="Got an empty pattern")
        cls._check_reference(system, reference, past=p)

        def evaluate(
            j: int,
            k: int,
            words: np.ndarray,
            start: int,
            cut: int,
        ) -> np.ndarray:
            """psi_{j+k} on words beginning at ``start`` with coordinates before ``cut`` replaced."""
            table = psi.values(j + k)
            columns = []
            for c in range(j + k - p, j + k + f + 1):
                if c < cut:
                    columns.append(np.full(words.shape[0], cls._reference_symbol(reference, cut - c)))
                else:
                    columns.append(words[:, c - start])
            return table[tuple(columns)]

        phi_depth = p + f + 1
        space.check_depth(phi_depth)

        def phi_builder(j: int) -> np.ndarray:
            mask = system.mask(j, phi_depth)
            words = np.argwhere(mask)
            total = evaluate(j, 0, words, j, j)
            for k in range(1, p + 1):
                total = total + evaluate(j, k, words, j, j) - evaluate(j, k, words, j, j + 1)
            values = np.zeros(mask.shape)
            values[tuple(words.T)] = total
            return values

        def u_builder(j: int) -> np.ndarray:
            mask = system.mask(j - p, 2 * p + f) if p else system.mask(j, 1)
            values = np.zeros(mask.shape)
            if p == 0:
                return values
            words = np.argwhere(mask)
            start = j - p
            total = np.zeros(words.shape[0])
            for k in range(p):
                total = total + evaluate(j, k, words, start, start) - evaluate(j, k, words, start, j)
            values[tuple(words.T)] = total
            return values

        phi = space.sequence(phi_builder, depth=phi_depth, name=f"sinai({psi.name})")
        u = TwoSidedFn(
            system,
            u_builder,
            past=p,
            future=max(p + f - 1, 0) if p else 0,
            name=f"transfer({psi.name})",
        )
        logger.debug("Sinai reduction of '%s': past=%d future=%d reference=%s", psi.name, p, f, reference)
        return SinaiReduction(psi=psi, phi=phi, u=u, reference=reference)

    # Reducible fixtures

    @staticmethod
    def reducible_fixture(
        model: Model,
        *,
        coboundary: FunctionSequence,
        lattice: FunctionSequence,
        weights: Callable[[int], float],
        span: float = 1.0,
        rpf: RpfData | None = None,
        check_count: int = 64,
    ) -> tuple[FunctionSequence, ReducibleDecomposition]:
        """
        Build f_j = M_j + g_j - g_{j+1} o T_j + a Z_j together with its certified decomposition.

        M_j = c_j (x_j - E_{mu_j} x_j) / s_j is the centered first symbol scaled to unit range;
        L_hat_j M_j = 0 holds whenever the model's normalized weights do not depend on the
        successor word, which the validation step checks.

        Raises:
            SplurgeRangeError: If the span is not positive
            SplurgeDecompositionInvalidError: If any identity of the decomposition fails
        """
        validate_positive(span, param_name="span")
        space = model.space
        solved = rpf or model.solve(horizon=check_count + 1)
        depth = solved.depth

        def martingale(j: int) -> np.ndarray:
            first = space.first_symbol(j).values
            # past the solved horizon the last marginal stands in (exact for stationary models)
            index = min(j, solved.horizon)
            marginal = solved.measure_weights(index).sum(axis=tuple(range(1, depth)))
            mean = float((marginal * first).sum())
            spread = float(first.max() - first.min()) or 1.0
            return weights(j) * (first - mean) / spread

        m_seq = space.sequence(martingale, depth=1, name="martingale")
        f_depth = max(m_seq.depth, coboundary.depth + 1, lattice.depth)
        space.check_depth(f_depth)

        def observable(j: int) -> np.ndarray:
            mask = space.mask(j, f_depth)
            shifted = np.broadcast_to(coboundary.values(j + 1, f_depth - 1)[None, ...], mask.shape)
            return m_seq.values(j, f_depth) + coboundary.values(j, f_depth) - shifted + span * lattice.values(j, f_depth)

        f = space.sequence(observable, depth=f_depth, name="reducible")
        decomposition = ReducibleDecomposition(
            observable=f,
            martingale=m_seq,
            coboundary=coboundary,
            lattice=lattice,
            span=span,
        )
        try:
            decomposition.validate(solved, min(check_count, solved.horizon - 1))
        except SplurgeDecompositionInvalidError:
            logger.warning("Reducible fixture on '%s' failed validation", model.name)
            raise
        return f, decomposition


class ModelZoo:
    """
    Named models for configs and tests.

    Names: coin, two_coin, iid:<p>, markov, markov:<file>, golden_parry, doubling,
    three_branch, cocycle, cocycle:<file>, irr_sqrt2, red_fixture[:c=<ratio>,g=<coef>,a=<span>],
    coboundary, mixed, sinai_prev, linear:<a0>,<a1>,..., vanishing.
    """

    DEFAULT_TRANSITION: tuple[tuple[float, ...], ...] = ((0.7, 0.3), (0.4, 0.6))
    DEFAULT_COCYCLE: tuple[tuple[tuple[float, ...], ...], ...] = (((2.0, 1.0), (1.0, 1.0)), ((1.0, 1.0), (1.0, 3.0)))
    DEFAULT_RED_RATIO: float = 0.5
    DEFAULT_RED_COBOUNDARY: float = 0.3

    @classmethod
    def names(cls) -> list[str]:
        return [
            "coin",
            "two_coin",
            "iid:<p>",
            "markov",
            "markov:<file>",
            "golden_parry",
            "doubling",
            "three_branch",
            "cocycle",
            "cocycle:<file>",
            "irr_sqrt2",
            "red_fixture",
            "coboundary",
            "mixed",
            "sinai_prev",
            "linear:<coeffs>",
            "vanishing",
        ]

    @staticmethod
    def _read_document(
        path_text: str,
        base_dir: Path | None,
    ) -> dict[str, Any]:
        path = Path(path_text)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        data = read_json(path)
        if not isinstance(data, dict):
            msg = f"Model file {path} must contain a JSON object"
            raise SplurgeParameterError(msg, details=f"Got {type(data).__name__}")
        return data

    @staticmethod
    def _iid(
        probabilities: Sequence[float],
        *,
        name: str,
    ) -> Model:
        law = validate_probability_vector(probabilities, param_name="probabilities")
        if np.any(law <= 0):
            msg = "iid laws must charge every symbol"
            raise SplurgeNotEllipticError(msg, details=f"law={law.tolist()}")
        system = SymbolicHelper.validate(SystemSpec.full_shift(law.size))
        space = FunctionSpace(system)
        log_law = np.log(law)
        phi = space.sequence(lambda j: log_law.copy(), depth=1, name="log-law")
        return Model(
            name=name,
            system=system,
            space=space,
            potential=phi,
            observable=space.named_sequence("first_symbol"),
            metadata={"family": "iid", "law": law.tolist()},
        )

    @staticmethod
    def _parse_params(text: str) -> dict[str, float]:
        params: dict[str, float] = {}
        for item in filter(None, (part.strip() for part in text.split(","))):
            key, sep, value = item.partition("=")
            if not sep:
                msg = f"Malformed model parameter '{item}'"
                raise SplurgeParameterError(msg, details="Expected key=value")
            try:
                params[key.strip()] = float(value)
            except ValueError as e:
                msg = f"Model parameter '{key}' is not a number"
                raise SplurgeParameterError(msg, details=str(e)) from e
        return params

    @classmethod
    def build(
        cls,
        name: str,
        *,
        base_dir: Path | None = None,
    ) -> Model:
        """
        Build a zoo model by name.

        Raises:
            SplurgeParameterError: If the name is unknown or its arguments are malformed
        """
        head, _, arg = name.strip().partition(":")
        builder = {
            "coin": cls._coin,
            "two_coin": cls._two_coin,
            "iid": cls._biased_coin,
            "markov": cls._markov,
            "golden_parry": cls._golden_parry,
            "doubling": cls._doubling,
            "three_branch": cls._three_branch,
            "cocycle": cls._cocycle,
            "irr_sqrt2": cls._irr_sqrt2,
            "red_fixture": cls._red_fixture,
            "coboundary": cls._coboundary,
            "mixed": cls._mixed,
            "sinai_prev": cls._sinai_prev,
            "linear": cls._linear,
            "vanishing": cls._vanishing,
        }.get(head)
        if builder is None:
            msg = f"Unknown model '{name}'"
            raise SplurgeParameterError(msg, details=f"Known models: {', '.join(cls.names())}")
        model = builder(arg, base_dir)
        model.name = name
        logger.info("Built model '%s' (%s)", name, model.metadata.get("family", head))
        return model

    @classmethod
    def _coin(cls, arg: str, base_dir: Path | None) -> Model:
        return cls._iid((0.5, 0.5), name="coin")

    @classmethod
    def _two_coin(cls, arg: str, base_dir: Path | None) -> Model:
        model = cls._iid((0.5, 0.5), name="two_coin")
        return model.with_observable(model.space.named_sequence("scaled:2"))

    @classmethod
    def _biased_coin(cls, arg: str, base_dir: Path | None) -> Model:
        try:
            p = float(arg)
        except ValueError as e:
            msg = f"iid model needs a probability, got '{arg}'"
            raise SplurgeParameterError(msg, details=str(e)) from e
        return cls._iid((1.0 - p, p), name=f"iid:{arg}")

    @classmethod
    def _markov(cls, arg: str, base_dir: Path | None) -> Model:
        if not arg:
            return ModelHelper.from_markov_chain([cls.DEFAULT_TRANSITION], (0.5, 0.5))
        data = cls._read_document(arg, base_dir)
        transitions = data.get("transitions") or [data.get("transition")]
        model = ModelHelper.from_markov_chain(
            transitions,
            data.get("initial"),
            normalize=bool(data.get("normalize", True)),
        )
        if "observable" in data:
            model = model.with_observable(model.space.named_sequence(data["observable"]))
        return model

    @classmethod
    def _golden_parry(cls, arg: str, base_dir: Path | None) -> Model:
        system = SymbolicHelper.validate(SystemSpec.constant([[1, 1], [1, 0]]))
        space = FunctionSpace(system)
        return Model(
            name="golden_parry",
            system=system,
            space=space,
            potential=space.named_sequence("zero"),
            observable=space.named_sequence("first_symbol"),
            metadata={"family": "parry"},
        )

    @classmethod
    def _doubling(cls, arg: str, base_dir: Path | None) -> Model:
        interval_map = IntervalMap.from_dict({"breakpoints": [[0, 0.5, 1]] * 2, "images": [[[0, 1], [0, 1]]]})
        return ModelHelper.pw_linear_markov_map(interval_map, name="doubling")

    @classmethod
    def _three_branch(cls, arg: str, base_dir: Path | None) -> Model:
        interval_map = IntervalMap.from_dict(
            {"breakpoints": [[0, 0.5, 0.75, 1]] * 2, "images": [[[0, 1], [0, 1], [0, 1]]]},
        )
        return ModelHelper.pw_linear_markov_map(interval_map, name="three_branch")

    @classmethod
    def _cocycle(cls, arg: str, base_dir: Path | None) -> Model:
        data: dict[str, Any] = {"matrices": cls.DEFAULT_COCYCLE}
        if arg:
            data = cls._read_document(arg, base_dir)
        matrices = safe_dict_access(data, "matrices", item_name="cocycle field")
        if not matrices:
            msg = "Cocycle document needs at least one matrix"
            raise SplurgeParameterError(msg, details="one positive matrix per driving symbol")
        driver = cls._iid([1.0 / len(matrices)] * len(matrices), name="cocycle")
        depth = int(data.get("depth", ModelHelper.DEFAULT_COCYCLE_DEPTH))
        observable, truncation = ModelHelper.driven_cocycle_observable(driver.space, matrices, depth=depth)
        path = [matrices[k % len(matrices)] for k in range(max(2, len(matrices)))]
        cocycle = ModelHelper.positive_matrix_cocycle(path)
        model = driver.with_observable(observable)
        model.metadata.update(
            {"family": "cocycle", "truncation_error": truncation, "periodic_path": cocycle.to_dict()},
        )
        return model

    @classmethod
    def _irr_sqrt2(cls, arg: str, base_dir: Path | None) -> Model:
        model = cls._iid((0.5, 0.5), name="irr_sqrt2")
        space = model.space
        root2 = math.sqrt(2.0)

        def builder(j: int) -> np.ndarray:
            x0 = np.arange(2, dtype=np.float64)[:, None]
            x1 = np.arange(2, dtype=np.float64)[None, :]
            return x0 + root2 * x0 * x1

        return model.with_observable(space.sequence(builder, depth=2, name="x0 + sqrt2 x0 x1"))

    @classmethod
    def _red_fixture(cls, arg: str, base_dir: Path | None) -> Model:
        params = cls._parse_params(arg)
        ratio = params.get("c", cls.DEFAULT_RED_RATIO)
        coef = params.get("g", cls.DEFAULT_RED_COBOUNDARY)
        span = params.get("a", 1.0)
        model = cls._iid((0.5, 0.5), name="red_fixture")
        space = model.space
        g = space.stationary(lambda j: space.scale(space.first_symbol(j), coef), name="coboundary")
        z = space.named_sequence("first_symbol")
        f, decomposition = ModelHelper.reducible_fixture(
            model,
            coboundary=g,
            lattice=z,
            weights=lambda j: ratio**j,
            span=span,
        )
        result = model.with_observable(f)
        result.decomposition = decomposition
        result.metadata.update({"family": "reducible", "c": ratio, "g": coef, "a": span})
        return result

    @classmethod
    def _coboundary(cls, arg: str, base_dir: Path | None) -> Model:
        model = cls._iid((0.5, 0.5), name="coboundary")
        space = model.space

        def builder(j: int) -> np.ndarray:
            return np.arange(2, dtype=np.float64)[:, None] - np.arange(2, dtype=np.float64)[None, :]

        return model.with_observable(space.sequence(builder, depth=2, name="b_j - b_{j+1} o T"))

    @classmethod
    def _mixed(cls, arg: str, base_dir: Path | None) -> Model:
        model = cls._iid((0.5, 0.5), name="mixed")
        space = model.space

        def builder(j: int) -> np.ndarray:
            x = np.arange(2, dtype=np.float64)
            return x + 2.0**-j * (2.0 * x - 1.0)

        return model.with_observable(space.sequence(builder, depth=1, name="coin + decaying martingale"))

    @classmethod
    def _sinai_prev(cls, arg: str, base_dir: Path | None) -> Model:
        model = cls._iid((0.5, 0.5), name="sinai_prev")
        psi = TwoSidedFn(
            model.system,
            lambda j: np.add.outer(np.arange(2.0), np.zeros(2)),
            past=1,
            future=0,
            name="x_{j-1}",
        )
        reduction = ModelHelper.sinai_reduce(model.space, psi)
        result = model.with_observable(reduction.phi)
        result.metadata.update({"family": "sinai", "reference_past": list(reduction.reference)})
        return result

    @classmethod
    def _linear(cls, arg: str, base_dir: Path | None) -> Model:
        try:
            coeffs = [float(a) for a in arg.split(",")] if arg else [1.0, 0.5, 0.25]
        except ValueError as e:
            msg = f"Malformed linear coefficients '{arg}'"
            raise SplurgeParameterError(msg, details=str(e)) from e
        model = ModelHelper.from_markov_chain([cls.DEFAULT_TRANSITION], (0.5, 0.5), name="linear")
        observable, _ = ModelHelper.linear_statistic(model, coeffs)
        return model.with_observable(observable)

    @classmethod
    def _vanishing(cls, arg: str, base_dir: Path | None) -> Model:
        model = cls._iid((0.5, 0.5), name="vanishing")
        space = model.space
        return model.with_observable(
            space.sequence(lambda j: np.arange(2.0) / (abs(j) + 1.0) ** 0.25, depth=1, name="x_j (j+1)^(-1/4)"),
        )
