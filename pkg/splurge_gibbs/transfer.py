"""
Transfer operators, sequential RPF triplets and Gibbs cylinder measures.

The working depth D_w is an invariant subspace for every transfer operator: an image of a
depth-D function depends on D-1 coordinates (and at least on the first one through the
adjacency), so all calculus here is exact finite-dimensional linear algebra on tensors of
shape (d_j, ..., d_{j+D_w-1}).

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

from splurge_gibbs.exceptions import (
    SplurgeIndexOutOfWindowError,
    SplurgeNoConvergenceError,
    SplurgeParameterError,
)
from splurge_gibbs.funcspace import FiniteDepthFn, FunctionSequence, FunctionSpace, Functional, pad_values
from splurge_gibbs.symbolic import ValidatedSystem, Word

logger = logging.getLogger(__name__)


def pull_back(
    values: np.ndarray,
    weights: np.ndarray,
    mask_next: np.ndarray,
    *,
    table_rank: int | None = None,
) -> np.ndarray:
    """
    Sum over the first coordinate of ``weights * values`` and embed the result at j+1.

    ``values`` may carry leading batch axes; its trailing ``table_rank`` axes (default: the
    depth of ``weights``) are the word axes. The image has the depth of ``mask_next``.
    """
    depth = weights.ndim
    rank = table_rank or depth
    if rank < depth or values.ndim < rank:
        msg = "Value tensor is shallower than the operator weights"
        raise SplurgeParameterError(msg, details=f"values rank {values.ndim}, table rank {rank}, weights rank {depth}")
    if rank > depth:
        weights = weights.reshape(weights.shape + (1,) * (rank - depth))
    summed = (values * weights).sum(axis=-rank)
    return pad_values(summed, rank - 1, mask_next)


@dataclass
class RpfData:
    """
    Solved RPF triplets (lambda_j, h_j, nu_j) and normalized operators on [0, horizon].

    Attributes:
        depth: working depth D_w
        horizon: operators are solved for 0 <= j < horizon, measures for 0 <= j <= horizon
        burn_in: number of extension steps used on each side
        contraction: measured geometric ratio of the slower of the forward and backward iterations
        tail_error: largest pair distance of the forward and backward sweeps
        boundary_flags: indices whose pair distance exceeded tol in the returned sweep
    """

    space: FunctionSpace
    potential: FunctionSequence
    depth: int
    horizon: int
    burn_in: int
    contraction: float
    tail_error: float
    lambdas: np.ndarray
    h_tables: list[np.ndarray]
    nu_tables: list[np.ndarray]
    mu_tables: list[np.ndarray]
    g_weights: list[np.ndarray]
    forward_tail: np.ndarray
    backward_tail: np.ndarray
    boundary_flags: list[int] = field(default_factory=list)

    @property
    def system(self) -> ValidatedSystem:
        return self.space.system

    def _require(
        self,
        j: int,
        *,
        upper: int,
    ) -> None:
        if not 0 <= j <= upper:
            msg = f"Index {j} is outside the solved range"
            raise SplurgeIndexOutOfWindowError(msg, details=f"solved 0..{upper}, re-solve with a larger horizon")

    def operator_weights(self, j: int) -> np.ndarray:
        self._require(j, upper=self.horizon - 1)
        return self.g_weights[j]

    def measure_weights(self, j: int) -> np.ndarray:
        self._require(j, upper=self.horizon)
        return self.mu_tables[j]

    def apply(
        self,
        j: int,
        values: np.ndarray,
        *,
        table_rank: int | None = None,
    ) -> np.ndarray:
        """Normalized operator at j on a (batched) value tensor of depth >= D_w."""
        rank = table_rank or self.depth
        mask_next = self.space.mask(j + 1, max(self.depth, rank - 1))
        return pull_back(values, self.operator_weights(j), mask_next, table_rank=rank)

    def lam(self, j: int) -> float:
        self._require(j, upper=self.horizon - 1)
        return float(self.lambdas[j])

    def h(self, j: int) -> FiniteDepthFn:
        self._require(j, upper=self.horizon)
        return FiniteDepthFn(j, self.h_tables[j], self.space.mask(j, self.depth))

    def nu(self, j: int) -> Functional:
        self._require(j, upper=self.horizon)
        return Functional(j, self.nu_tables[j], self.space.mask(j, self.depth))

    def mu(self, j: int) -> Functional:
        self._require(j, upper=self.horizon)
        return Functional(j, self.mu_tables[j], self.space.mask(j, self.depth))

    def g(self, j: int) -> FiniteDepthFn:
        """Normalized potential g_j (zero on inadmissible words)."""
        weights = self.operator_weights(j)
        with np.errstate(divide="ignore"):
            logs = np.where(weights > 0, np.log(np.where(weights > 0, weights, 1.0)), 0.0)
        return FiniteDepthFn(j, logs, self.space.mask(j, self.depth))

    def to_dict(
        self,
        *,
        include_tables: bool = True,
    ) -> dict[str, Any]:
        """JSON-ready export of the lambda sequence, tables and diagnostics."""
        data: dict[str, Any] = {
            "depth": self.depth,
            "horizon": self.horizon,
            "burn_in": self.burn_in,
            "contraction": self.contraction,
            "tail_error": self.tail_error,
            "boundary_flags": list(self.boundary_flags),
            "lambda": [float(x) for x in self.lambdas],
        }
        if include_tables:
            data["h"] = [FiniteDepthFn(j, t, self.space.mask(j, self.depth)).table() for j, t in enumerate(self.h_tables)]
            data["nu"] = [self.nu(j).weights[self.space.mask(j, self.depth)].tolist() for j in range(self.horizon + 1)]
        return data


class TransferHelper:
    """
    Transfer operators and sequential RPF iteration.

    Attributes:
        DEFAULT_TOL (float): target accuracy of the burn-in
        DEFAULT_K_CAP (int): largest burn-in accepted
        DEFAULT_HORIZON (int): default number of solved operator indices
        DEFAULT_CONTRACTION_STEPS (int): steps used to measure the contraction ratio
        MIN_CONTRACTION (float): floor for the measured ratio when iterates merge exactly
        MERGE_FLOOR (float): pair distances at or below this count as merged
    """

    DEFAULT_TOL: float = 1e-10
    DEFAULT_K_CAP: int = 200
    DEFAULT_HORIZON: int = 64
    DEFAULT_CONTRACTION_STEPS: int = 48
    MIN_CONTRACTION: float = 1e-3
    MERGE_FLOOR: float = 1e-14
    MIN_DEPTH: int = 2

    @classmethod
    def working_depth(cls, *depths: int) -> int:
        """Smallest invariant depth covering every given depth."""
        return max((cls.MIN_DEPTH, *depths))

    @staticmethod
    def _potential_weights(
        potential: FunctionSequence,
        j: int,
        depth: int,
    ) -> np.ndarray:
        mask = potential.space.mask(j, depth)
        return np.where(mask, np.exp(potential.values(j, depth)), 0.0)

    @classmethod
    def raw_apply(
        cls,
        space: FunctionSpace,
        potential: FunctionSequence,
        j: int,
        f: FiniteDepthFn,
        *,
        depth: int | None = None,
    ) -> FiniteDepthFn:
        """
        (L_j f)(x) = sum over preimage symbols a of e^{phi_j(a x)} f(a x), embedded at depth D_w.

        Example:
            On the golden-mean shift with phi = 0 and f = 1 the image is 2 on words starting
            with 0 and 1 on words starting with 1.
        """
        if f.base != j:
            msg = "Function base does not match the operator index"
            raise SplurgeIndexOutOfWindowError(msg, details=f"function base {f.base}, operator index {j}")
        d_w = space.check_depth(depth or cls.working_depth(f.depth, potential.depth), j)
        values = pad_values(f.values, f.depth, space.mask(j, d_w))
        image = pull_back(values, cls._potential_weights(potential, j, d_w), space.mask(j + 1, d_w))
        return FiniteDepthFn(j + 1, image, space.mask(j + 1, d_w))

    @classmethod
    def _forward_pair(
        cls,
        space: FunctionSpace,
        potential: FunctionSequence,
        depth: int,
        start: int,
        steps: int,
        *,
        keep_from: int | None = None,
    ) -> tuple[list[np.ndarray], np.ndarray]:
        """Two mean-normalized forward sweeps; returns kept iterates of the first and pair distances."""
        mask = space.mask(start, depth)
        v = mask.astype(np.float64)
        w = mask * (1.0 + np.linspace(0.0, 1.0, mask.size).reshape(mask.shape))
        kept: list[np.ndarray] = []
        distances = np.empty(steps + 1)

        for step in range(steps + 1):
            j = start + step
            m = space.mask(j, depth)
            v = v / v[m].mean()
            w = w / w[m].mean()
            distances[step] = float(np.abs(v - w)[m].max())
            if keep_from is not None and j >= keep_from:
                kept.append(v)
            if step == steps:
                break
            weights = cls._potential_weights(potential, j, depth)
            mask_next = space.mask(j + 1, depth)
            v = pull_back(v, weights, mask_next)
            w = pull_back(w, weights, mask_next)

        return kept, distances

    @staticmethod
    def _adjoint_step(
        weights: np.ndarray,
        nu: np.ndarray,
    ) -> np.ndarray:
        image = weights * nu.sum(axis=-1)[None, ...]
        return image / image.sum()

    @classmethod
    def _backward_pair(
        cls,
        space: FunctionSpace,
        potential: FunctionSequence,
        depth: int,
        end: int,
        steps: int,
    ) -> np.ndarray:
        """L1 distances of two normalized adjoint sweeps run from ``end`` down to ``end - steps``."""
        mask = space.mask(end, depth)
        nu = mask / mask.sum()
        nu_alt = mask * (1.0 + np.linspace(0.0, 1.0, mask.size).reshape(mask.shape))
        nu_alt = nu_alt / nu_alt.sum()
        distances = np.empty(steps + 1)
        distances[0] = float(np.abs(nu - nu_alt).sum())
        for step in range(1, steps + 1):
            weights = cls._potential_weights(potential, end - step, depth)
            nu = cls._adjoint_step(weights, nu)
            nu_alt = cls._adjoint_step(weights, nu_alt)
            distances[step] = float(np.abs(nu - nu_alt).sum())
        return distances

    @classmethod
    def _decay_ratio(
        cls,
        distances: np.ndarray,
        direction: str,
    ) -> float:
        steps = distances.size - 1
        positive = np.flatnonzero(distances > cls.MERGE_FLOOR)
        if positive.size < 3:
            return cls.MIN_CONTRACTION

        tail = positive[positive.size // 2 :]
        if tail.size < 2:
            tail = positive
        slope, _ = np.polyfit(tail.astype(np.float64), np.log(distances[tail]), 1)
        ratio = float(math.exp(slope))
        if not math.isfinite(ratio) or ratio >= 1.0:
            # pairs that merged early carry no usable slope
            if positive[-1] < steps // 2:
                return cls.MIN_CONTRACTION
            msg = f"{direction.capitalize()} iteration does not contract"
            raise SplurgeNoConvergenceError(msg, details=f"measured ratio {ratio:.6g}")
        return max(ratio, cls.MIN_CONTRACTION)

    @classmethod
    def measure_contraction(
        cls,
        space: FunctionSpace,
        potential: FunctionSequence,
        depth: int,
        *,
        steps: int = DEFAULT_CONTRACTION_STEPS,
    ) -> float:
        """
        Geometric decay ratio of the slower of the forward and backward iterations.

        Each direction runs two differently seeded normalized sweeps and fits the log of their
        distance. A pair that merges exactly contributes MIN_CONTRACTION.

        Raises:
            SplurgeNoConvergenceError: If either direction does not contract
        """
        _, forward = cls._forward_pair(space, potential, depth, 0, steps)
        backward = cls._backward_pair(space, potential, depth, steps, steps)
        ratio = max(cls._decay_ratio(forward, "forward"), cls._decay_ratio(backward, "backward"))
        logger.debug("Measured contraction %.4g over %d steps", ratio, steps)
        return ratio

    @classmethod
    def rpf_solve(
        cls,
        space: FunctionSpace,
        potential: FunctionSequence,
        *,
        depth: int | None = None,
        horizon: int | None = None,
        tol: float = DEFAULT_TOL,
        k_cap: int = DEFAULT_K_CAP,
    ) -> RpfData:
        """
        Solve the sequential RPF problem on [0, horizon].

        Forward iteration of mean-normalized images from the constant seed at -K gives h_j;
        backward iteration of adjoint weights from the uniform seed at horizon + K gives nu_j.
        The normalization is nu_j(1) = 1 and nu_j(h_j) = 1, and
        g_j = phi_j + ln h_j - ln h_{j+1} o T - ln lambda_j.

        K starts from the measured contraction and is doubled, up to k_cap, until both sweeps
        reach tol at every solved index.

        Raises:
            SplurgeNoConvergenceError: If tol is not reached within k_cap burn-in steps
        """
        d_w = space.check_depth(depth or cls.working_depth(potential.depth))
        if potential.depth > d_w:
            msg = "Potential is deeper than the working depth"
            raise SplurgeParameterError(msg, details=f"potential depth {potential.depth}, working depth {d_w}")
        n_ops = max(horizon or cls.DEFAULT_HORIZON, 1)

        ratio = cls.measure_contraction(space, potential, d_w)
        burn_in = max(math.ceil(math.log(tol) / math.log(ratio)), d_w + 2)
        if burn_in > k_cap:
            msg = f"Burn-in {burn_in} exceeds K_cap={k_cap}"
            raise SplurgeNoConvergenceError(msg, details=f"measured contraction {ratio:.6g}")

        while True:
            logger.debug("RPF solve: depth=%d horizon=%d ratio=%.4g burn_in=%d", d_w, n_ops, ratio, burn_in)
            rpf = cls._solve_window(space, potential, d_w, n_ops, burn_in, ratio, tol)
            if not rpf.boundary_flags:
                return rpf
            if burn_in >= k_cap:
                msg = f"RPF tail error {rpf.tail_error:.3g} above tol={tol} at K_cap={k_cap}"
                raise SplurgeNoConvergenceError(
                    msg,
                    details=f"{len(rpf.boundary_flags)} boundary index(es), first {rpf.boundary_flags[0]}",
                )
            logger.debug("Tail error %.3g above tol, doubling burn-in %d", rpf.tail_error, burn_in)
            burn_in = min(2 * burn_in, k_cap)

    @classmethod
    def _solve_window(
        cls,
        space: FunctionSpace,
        potential: FunctionSequence,
        d_w: int,
        n_ops: int,
        burn_in: int,
        ratio: float,
        tol: float,
    ) -> RpfData:
        kept, fwd = cls._forward_pair(space, potential, d_w, -burn_in, burn_in + n_ops, keep_from=0)
        forward_tail = fwd[burn_in:]

        nus: list[np.ndarray] = [np.empty(0)] * (n_ops + 1)
        backward_tail = np.empty(n_ops + 1)
        end = n_ops + burn_in
        mask_end = space.mask(end, d_w)
        nu = mask_end / mask_end.sum()
        nu_alt = mask_end * (1.0 + np.linspace(0.0, 1.0, mask_end.size).reshape(mask_end.shape))
        nu_alt = nu_alt / nu_alt.sum()
        for j in range(end - 1, -1, -1):
            weights = cls._potential_weights(potential, j, d_w)
            nu = cls._adjoint_step(weights, nu)
            nu_alt = cls._adjoint_step(weights, nu_alt)
            if j <= n_ops:
                nus[j] = nu
                backward_tail[j] = float(np.abs(nu - nu_alt).sum())
        if end <= n_ops:
            nus[end] = mask_end / mask_end.sum()
            backward_tail[end] = 0.0

        h_tables: list[np.ndarray] = []
        mu_tables: list[np.ndarray] = []
        for j in range(n_ops + 1):
            v = kept[j]
            h = v / float((nus[j] * v).sum())
            if float(h[space.mask(j, d_w)].min()) <= 0.0:
                msg = f"Non-positive eigenfunction at j={j}"
                raise SplurgeNoConvergenceError(msg, details="potential too large for double precision")
            h_tables.append(h)
            mu_tables.append(h * nus[j])

        lambdas = np.empty(n_ops)
        g_weights: list[np.ndarray] = []
        for j in range(n_ops):
            weights = cls._potential_weights(potential, j, d_w)
            mask_next = space.mask(j + 1, d_w)
            image = pull_back(h_tables[j], weights, mask_next)
            lambdas[j] = float((image[mask_next] / h_tables[j + 1][mask_next]).mean())
            h_next_reduced = h_tables[j + 1].max(axis=-1)
            denominator = np.where(space.mask(j, d_w), h_next_reduced[None, ...] * lambdas[j], 1.0)
            g_weights.append(weights * h_tables[j] / denominator)

        tail_error = float(max(forward_tail.max(), backward_tail.max()))
        flags = [j for j in range(n_ops + 1) if forward_tail[j] > tol or backward_tail[j] > tol]

        return RpfData(
            space=space,
            potential=potential,
            depth=d_w,
            horizon=n_ops,
            burn_in=burn_in,
            contraction=ratio,
            tail_error=tail_error,
            lambdas=lambdas,
            h_tables=h_tables,
            nu_tables=nus,
            mu_tables=mu_tables,
            g_weights=g_weights,
            forward_tail=forward_tail,
            backward_tail=backward_tail,
            boundary_flags=flags,
        )

    @staticmethod
    def normalized_apply(
        rpf: RpfData,
        j: int,
        f: FiniteDepthFn,
    ) -> FiniteDepthFn:
        """L_hat_j f at depth D_w; L_hat_j 1 = 1."""
        if f.base != j:
            msg = "Function base does not match the operator index"
            raise SplurgeIndexOutOfWindowError(msg, details=f"function base {f.base}, operator index {j}")
        rank = max(rpf.depth, f.depth)
        values = pad_values(f.values, f.depth, rpf.space.mask(j, rank))
        image = rpf.apply(j, values, table_rank=rank)
        mask_next = rpf.space.mask(j + 1, image.ndim)
        return FiniteDepthFn(j + 1, image, mask_next)

    @staticmethod
    def integrate_values(
        rpf: RpfData,
        j: int,
        values: np.ndarray,
        *,
        table_rank: int | None = None,
    ) -> np.ndarray:
        """
        mu_j of a (batched) value tensor of any depth.

        Deeper tensors are pushed forward by normalized operators until they fit the working
        depth; by equivariance mu_{j+1}(L_hat_j F) = mu_j(F), so the result is exact.
        """
        current = values
        index = j
        rank = table_rank or values.ndim
        while rank > rpf.depth:
            weights = rpf.operator_weights(index)
            current = pull_back(current, weights, rpf.space.mask(index + 1, rank - 1), table_rank=rank)
            index += 1
            rank -= 1
        mask = rpf.space.mask(index, rpf.depth)
        padded = pad_values(current, rank, mask)
        axes = tuple(range(padded.ndim - rpf.depth, padded.ndim))
        return (padded * rpf.measure_weights(index)).sum(axis=axes)

    @classmethod
    def integrate(
        cls,
        rpf: RpfData,
        f: FiniteDepthFn,
    ) -> complex | float:
        """mu_j(f) for a function at base j."""
        value = cls.integrate_values(rpf, f.base, f.values)
        return complex(value) if np.iscomplexobj(value) else float(value)

    @staticmethod
    def gibbs_cylinder(
        rpf: RpfData,
        word: Word,
    ) -> float:
        """
        mu_j([w]) for a word at base j.

        Uses mu_j([w]) = e^{g_j(w_0..w_{D-1})} mu_{j+1}([w_1..]) repeatedly, which is the
        duality relation applied to the cylinder indicator; inadmissible words get 0.
        """
        system = rpf.space.system
        if not system.is_admissible(word):
            return 0.0
        d_w = rpf.depth
        symbols = word.symbols
        j = word.base
        log_mass = 0.0
        k = 0
        while len(symbols) - k >= d_w:
            weight = float(rpf.operator_weights(j + k)[symbols[k : k + d_w]])
            if weight <= 0.0:
                return 0.0
            log_mass += math.log(weight)
            k += 1
        rest = symbols[k:]
        weights = rpf.measure_weights(j + k)
        axes = tuple(range(len(rest), d_w))
        marginal = weights.sum(axis=axes) if axes else weights
        tail = float(marginal[rest]) if rest else float(marginal.sum())
        return float(math.exp(log_mass) * tail)

    @staticmethod
    def gibbs_sandwich(
        rpf: RpfData,
        word: Word,
    ) -> float:
        """
        mu_j([w]) * lambda_{j,n} * e^{-S_{j,n} phi(x)} for x the least admissible extension of w.

        Gibbs measures keep this ratio inside [1/C, C] uniformly in the cylinder.
        """
        system = rpf.space.system
        n = len(word)
        d_w = rpf.depth
        x = system.least_extension(word, d_w - 1)
        total = 0.0
        for i in range(n):
            total += float(rpf.potential.values(word.base + i, d_w)[x.symbols[i : i + d_w]])
        log_lambda = float(np.log(rpf.lambdas[word.base : word.base + n]).sum())
        mass = TransferHelper.gibbs_cylinder(rpf, word)
        if mass <= 0.0:
            return 0.0
        return float(math.exp(math.log(mass) + log_lambda - total))

    @classmethod
    def duality_residual(
        cls,
        rpf: RpfData,
        j: int,
        f: FiniteDepthFn,
        g: FiniteDepthFn,
    ) -> float:
        """|mu_j((f o T_j) g) - mu_{j+1}(f L_hat_j g)| for f at j+1 and g at j."""
        space = rpf.space
        if f.base != j + 1 or g.base != j:
            msg = "duality_residual expects f at j+1 and g at j"
            raise SplurgeParameterError(msg, details=f"f base {f.base}, g base {g.base}, j={j}")
        lhs = cls.integrate(rpf, space.mul(space.compose_shift(f), g))
        rhs = cls.integrate(rpf, space.mul(f, cls.normalized_apply(rpf, j, g)))
        return float(abs(lhs - rhs))

    @staticmethod
    def unit_residual(rpf: RpfData) -> float:
        """max_j sup |L_hat_j 1 - 1|."""
        worst = 0.0
        for j in range(rpf.horizon):
            mask = rpf.space.mask(j, rpf.depth)
            image = rpf.apply(j, mask.astype(np.float64))
            mask_next = rpf.space.mask(j + 1, rpf.depth)
            worst = max(worst, float(np.abs(image - 1.0)[mask_next].max()))
        return worst

    @classmethod
    def eigen_residual(
        cls,
        rpf: RpfData,
    ) -> float:
        """max_j sup |L_j h_j - lambda_j h_{j+1}| using the raw potential."""
        worst = 0.0
        for j in range(rpf.horizon):
            weights = cls._potential_weights(rpf.potential, j, rpf.depth)
            mask_next = rpf.space.mask(j + 1, rpf.depth)
            image = pull_back(rpf.h_tables[j], weights, mask_next)
            gap = np.abs(image - rpf.lambdas[j] * rpf.h_tables[j + 1])[mask_next]
            worst = max(worst, float(gap.max()))
        return worst
