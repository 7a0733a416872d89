"""
Finite-depth function spaces on sequential shift spaces.

A depth-D function at index j is stored as a dense value tensor of shape
(d_j, ..., d_{j+D-1}) together with the admissibility mask of the system; entries on
inadmissible words are kept at zero and never read. The module provides embedding to
larger depth, composition with the shift, pointwise algebra, the exact Hoelder
seminorm of the locally constant extension and the Lasota-Yorke star norm.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from typing import Any

import numpy as np

from splurge_gibbs.exceptions import (
    SplurgeBaseMismatchError,
    SplurgeDepthOverflowError,
    SplurgeIndexOutOfWindowError,
    SplurgeInadmissibleError,
    SplurgeParameterError,
    SplurgeRangeError,
    SplurgeShapeMismatchError,
)
from splurge_gibbs.symbolic import ValidatedSystem, Word

logger = logging.getLogger(__name__)

_PAIRWISE_CHUNK = 1 << 22


def pad_values(
    values: np.ndarray,
    table_rank: int,
    mask: np.ndarray,
) -> np.ndarray:
    missing = mask.ndim - table_rank
    if missing < 0:
        msg = "Cannot embed a function into a smaller depth"
        raise SplurgeParameterError(msg, details=f"from {table_rank} to {mask.ndim}")
    batch = values.shape[: values.ndim - table_rank]
    expanded = values.reshape(values.shape + (1,) * missing)
    return np.broadcast_to(expanded, batch + mask.shape) * mask


def holder_seminorm_values(
    values: np.ndarray,
    mask: np.ndarray,
    alpha: float,
) -> np.ndarray:
    """
    Exact Hoelder seminorm of locally constant functions, batched over leading axes.

    Pairs of admissible words sharing a prefix of length k are at distance at most 2^{-k};
    taking the largest spread inside every prefix-k group and weighting it by 2^{k alpha}
    yields the supremum over all pairs.
    """
    depth = mask.ndim
    batch_shape = values.shape[: values.ndim - depth]
    flat_mask = mask.reshape(-1)
    width = flat_mask.size
    flat = values.reshape((-1, width))
    result = np.zeros(flat.shape[0])
    is_complex = np.iscomplexobj(values)

    for k in range(depth):
        prefix = math.prod(mask.shape[:k])
        suffix = width // prefix
        group_mask = flat_mask.reshape(prefix, suffix)
        grouped = flat.reshape((flat.shape[0], prefix, suffix))
        if is_complex:
            pair_mask = group_mask[:, :, None] & group_mask[:, None, :]
            chunk = max(1, _PAIRWISE_CHUNK // max(1, prefix * suffix * suffix))
            spread = np.empty((flat.shape[0], prefix))
            for start in range(0, flat.shape[0], chunk):
                block = grouped[start : start + chunk]
                diff = np.abs(block[:, :, :, None] - block[:, :, None, :])
                spread[start : start + chunk] = np.where(pair_mask, diff, 0.0).max(axis=(-1, -2))
        else:
            hi = np.where(group_mask, grouped, -np.inf).max(axis=-1)
            lo = np.where(group_mask, grouped, np.inf).min(axis=-1)
            spread = np.where(np.isfinite(hi) & np.isfinite(lo), hi - lo, 0.0)
        level = spread.max(axis=-1) * 2.0 ** (k * alpha)
        np.maximum(result, level, out=result)

    return result.reshape(batch_shape)


def star_norm_values(
    values: np.ndarray,
    mask: np.ndarray,
    alpha: float,
    c1: float,
) -> np.ndarray:
    """max(sup|f|, G_alpha(f) / (2 C1)), batched over leading axes."""
    depth = mask.ndim
    flat = np.abs(values).reshape(values.shape[: values.ndim - depth] + (-1,))
    sup = np.where(mask.reshape(-1), flat, 0.0).max(axis=-1)
    return np.maximum(sup, holder_seminorm_values(values, mask, alpha) / (2.0 * c1))


class FiniteDepthFn:
    """
    A real- or complex-valued function at base index j depending on D coordinates.

    Instances are immutable; all algebra lives on :class:`FunctionSpace`.
    """

    __slots__ = ("_base", "_values", "_mask")

    def __init__(
        self,
        base: int,
        values: np.ndarray,
        mask: np.ndarray,
    ) -> None:
        if values.shape != mask.shape:
            msg = "Value table does not match the admissibility mask"
            raise SplurgeShapeMismatchError(msg, details=f"values {values.shape}, mask {mask.shape}")
        array = np.where(mask, values, 0).astype(values.dtype, copy=False)
        array.setflags(write=False)
        self._base = base
        self._values = array
        self._mask = mask

    @property
    def base(self) -> int:
        return self._base

    @property
    def depth(self) -> int:
        return self._mask.ndim

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def is_complex(self) -> bool:
        return bool(np.iscomplexobj(self._values))

    def admissible_values(self) -> np.ndarray:
        """Values on admissible words in lexicographic order."""
        return self._values[self._mask]

    def sup_norm(self) -> float:
        vals = self.admissible_values()
        return float(np.abs(vals).max()) if vals.size else 0.0

    def __call__(self, word: Word) -> complex | float:
        if word.base != self._base:
            msg = "Word base does not match function base"
            raise SplurgeBaseMismatchError(msg, details=f"word {word.base}, function {self._base}")
        if len(word) < self.depth:
            msg = "Word is shorter than the function depth"
            raise SplurgeParameterError(msg, details=f"length {len(word)}, depth {self.depth}")
        key = word.symbols[: self.depth]
        if not self._mask[key]:
            msg = f"Word {word} is not admissible"
            raise SplurgeInadmissibleError(msg, details=f"base {word.base}")
        value = self._values[key]
        return complex(value) if self.is_complex else float(value)

    def table(self) -> dict[str, complex | float]:
        """Mapping from admissible word strings to values."""
        result: dict[str, complex | float] = {}
        for row in np.argwhere(self._mask):
            key = tuple(int(s) for s in row)
            word = Word(base=self._base, symbols=key)
            value = self._values[key]
            result[str(word)] = complex(value) if self.is_complex else float(value)
        return result

    def __repr__(self) -> str:
        kind = "complex" if self.is_complex else "real"
        return f"FiniteDepthFn(base={self._base}, depth={self.depth}, {kind})"


class Functional:
    """
    Weights over admissible depth-D words at base j.

    Probability functionals (cylinder masses of a measure) have nonnegative weights summing
    to one; general functionals may carry arbitrary real or complex weights.
    """

    __slots__ = ("_base", "_weights", "_mask")

    def __init__(
        self,
        base: int,
        weights: np.ndarray,
        mask: np.ndarray,
    ) -> None:
        if weights.shape != mask.shape:
            msg = "Weight table does not match the admissibility mask"
            raise SplurgeShapeMismatchError(msg, details=f"weights {weights.shape}, mask {mask.shape}")
        array = np.where(mask, weights, 0)
        array.setflags(write=False)
        self._base = base
        self._weights = array
        self._mask = mask

    @property
    def base(self) -> int:
        return self._base

    @property
    def depth(self) -> int:
        return self._mask.ndim

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    def total(self) -> complex | float:
        value = self._weights.sum()
        return complex(value) if np.iscomplexobj(value) else float(value)

    def is_probability(self, atol: float = 1e-9) -> bool:
        if np.iscomplexobj(self._weights):
            return False
        return bool((self._weights >= -atol).all()) and abs(float(self._weights.sum()) - 1.0) <= atol

    def marginal(self, depth: int) -> Functional:
        """Restriction to cylinders of a smaller depth."""
        if depth > self.depth or depth < 1:
            msg = "Marginal depth out of range"
            raise SplurgeRangeError(msg, details=f"depth {depth}, functional depth {self.depth}")
        axes = tuple(range(depth, self.depth))
        weights = self._weights.sum(axis=axes) if axes else self._weights
        mask = self._mask.any(axis=axes) if axes else self._mask
        return Functional(self._base, weights, mask)

    def __repr__(self) -> str:
        return f"Functional(base={self._base}, depth={self.depth})"


class FunctionSequence:
    """
    Index-dependent sequence (f_j) of finite-depth functions.

    The sequence is defined by a builder returning the value tensor of f_j at its native
    depth; tensors are cached per index. Sequences may be declared on a bounded index range,
    outside of which access raises :class:`SplurgeIndexOutOfWindowError`.
    """

    def __init__(
        self,
        space: FunctionSpace,
        builder: Callable[[int], np.ndarray],
        *,
        depth: int,
        name: str = "f",
        index_range: tuple[int, int] | None = None,
    ) -> None:
        space.check_depth(depth)
        self._space = space
        self._builder = builder
        self._depth = depth
        self._name = name
        self._range = index_range
        self._cache: dict[int, np.ndarray] = {}

    @property
    def depth(self) -> int:
        return self._depth

    @property
    def name(self) -> str:
        return self._name

    @property
    def space(self) -> FunctionSpace:
        return self._space

    def native(self, j: int) -> np.ndarray:
        """Value tensor of f_j at the native depth (inadmissible entries zeroed)."""
        cached = self._cache.get(j)
        if cached is not None:
            return cached
        if self._range is not None and not self._range[0] <= j < self._range[1]:
            msg = f"Index {j} outside the declared range of '{self._name}'"
            raise SplurgeIndexOutOfWindowError(msg, details=f"range={self._range}")

        mask = self._space.system.mask(j, self._depth)
        raw = np.asarray(self._builder(j))
        if raw.shape != mask.shape:
            msg = f"Builder for '{self._name}' returned the wrong shape at j={j}"
            raise SplurgeShapeMismatchError(msg, details=f"Expected {mask.shape}, got {raw.shape}")
        values = np.where(mask, raw, 0)
        values.setflags(write=False)
        self._cache[j] = values
        return values

    def values(
        self,
        j: int,
        depth: int,
    ) -> np.ndarray:
        """Value tensor of f_j embedded at the given depth."""
        native = self.native(j)
        if depth == self._depth:
            return native
        return pad_values(native, self._depth, self._space.system.mask(j, depth))

    def __getitem__(self, j: int) -> FiniteDepthFn:
        return FiniteDepthFn(j, self.native(j), self._space.system.mask(j, self._depth))

    def is_integer_valued(
        self,
        indices: range,
        *,
        atol: float = 1e-9,
    ) -> bool:
        for j in indices:
            vals = self.native(j)[self._space.system.mask(j, self._depth)]
            if np.iscomplexobj(vals) or np.any(np.abs(vals - np.round(vals)) > atol):
                return False
        return True

    def value_range(self, j: int) -> tuple[float, float]:
        vals = self.native(j)[self._space.system.mask(j, self._depth)]
        return float(vals.min()), float(vals.max())

    def map(
        self,
        func: Callable[[int, np.ndarray], np.ndarray],
        *,
        name: str | None = None,
    ) -> FunctionSequence:
        """New sequence whose j-th tensor is ``func(j, native tensor)``."""
        return FunctionSequence(
            self._space,
            lambda j: func(j, self.native(j)),
            depth=self._depth,
            name=name or self._name,
            index_range=self._range,
        )

    def __repr__(self) -> str:
        return f"FunctionSequence(name={self._name!r}, depth={self._depth})"


class FunctionSpace:
    """
    Finite-depth function calculus over a validated system.

    Attributes:
        DEFAULT_DEPTH_CAP (int): Largest depth any table may have
        DEFAULT_MAX_ENTRIES (int): Largest number of entries in a single table
        DEFAULT_ALPHA (float): Default Hoelder exponent
    """

    DEFAULT_DEPTH_CAP: int = 12
    DEFAULT_MAX_ENTRIES: int = 1 << 24
    DEFAULT_ALPHA: float = 1.0

    def __init__(
        self,
        system: ValidatedSystem,
        *,
        depth_cap: int = DEFAULT_DEPTH_CAP,
        max_entries: int = DEFAULT_MAX_ENTRIES,
    ) -> None:
        self._system = system
        self._depth_cap = depth_cap
        self._max_entries = max_entries

    @property
    def system(self) -> ValidatedSystem:
        return self._system

    @property
    def depth_cap(self) -> int:
        return self._depth_cap

    def check_depth(
        self,
        depth: int,
        j: int = 0,
    ) -> int:
        """
        Raises:
            SplurgeDepthOverflowError: If the depth or the table size exceeds the caps
        """
        if depth < 1:
            msg = "Depth must be >= 1"
            raise SplurgeRangeError(msg, details=f"Got depth={depth}")
        entries = math.prod(self._system.shape(j, depth))
        if depth > self._depth_cap or entries > self._max_entries:
            msg = f"Depth {depth} exceeds the configured cap"
            raise SplurgeDepthOverflowError(
                msg,
                details=f"depth_cap={self._depth_cap}, entries={entries}, max_entries={self._max_entries}",
            )
        return depth

    def mask(
        self,
        j: int,
        depth: int,
    ) -> np.ndarray:
        return self._system.mask(j, depth)

    # Construction

    def from_values(
        self,
        j: int,
        values: Any,
    ) -> FiniteDepthFn:
        array = np.asarray(values)
        depth = array.ndim
        self.check_depth(depth, j)
        return FiniteDepthFn(j, array, self.mask(j, depth))

    def constant(
        self,
        j: int,
        value: complex | float,
        *,
        depth: int = 1,
    ) -> FiniteDepthFn:
        mask = self.mask(j, depth)
        dtype = np.complex128 if isinstance(value, complex) else np.float64
        return FiniteDepthFn(j, np.full(mask.shape, value, dtype=dtype), mask)

    def first_symbol(
        self,
        j: int,
        *,
        depth: int = 1,
    ) -> FiniteDepthFn:
        """The function x -> x_j (symbol index as a number)."""
        mask = self.mask(j, depth)
        values = np.arange(mask.shape[0], dtype=np.float64).reshape((-1,) + (1,) * (depth - 1))
        return FiniteDepthFn(j, np.broadcast_to(values, mask.shape).copy(), mask)

    def indicator(
        self,
        j: int,
        word: Word | str,
    ) -> FiniteDepthFn:
        """Indicator of the cylinder named by ``word`` at base j."""
        target = Word.from_string(j, word) if isinstance(word, str) else word
        if target.base != j:
            msg = "Word base does not match the requested index"
            raise SplurgeBaseMismatchError(msg, details=f"word {target.base}, index {j}")
        depth = self.check_depth(len(target), j)
        mask = self.mask(j, depth)
        values = np.zeros(mask.shape)
        if self._system.is_admissible(target):
            values[target.symbols] = 1.0
        return FiniteDepthFn(j, values, mask)

    def linear(
        self,
        j: int,
        coeffs: Sequence[float],
    ) -> FiniteDepthFn:
        """The function x -> sum_k a_k x_{j+k} at depth len(coeffs)."""
        depth = self.check_depth(len(coeffs), j)
        mask = self.mask(j, depth)
        values = np.zeros(mask.shape)
        for k, a in enumerate(coeffs):
            axis_shape = [1] * depth
            axis_shape[k] = mask.shape[k]
            values = values + a * np.arange(mask.shape[k], dtype=np.float64).reshape(axis_shape)
        return FiniteDepthFn(j, values, mask)

    def from_table(
        self,
        j: int,
        table: Mapping[str, float],
    ) -> FiniteDepthFn:
        """
        Build a function from a table keyed by word strings such as ``{"01": 0.3}``.

        Every admissible word of the common key length must be present.
        """
        lengths = {len(k) for k in table}
        if len(lengths) != 1:
            msg = "Value table keys must all have the same length"
            raise SplurgeParameterError(msg, details=f"Key lengths: {sorted(lengths)}")
        depth = self.check_depth(lengths.pop(), j)
        mask = self.mask(j, depth)
        values = np.zeros(mask.shape)
        for key, value in table.items():
            word = Word.from_string(j, key)
            if not self._system.is_admissible(word):
                msg = f"Table key '{key}' is not an admissible word at j={j}"
                raise SplurgeInadmissibleError(msg, details=f"depth {depth}")
            values[word.symbols] = float(value)
        missing = int(mask.sum()) - len(table)
        if missing > 0:
            msg = f"Value table misses {missing} admissible word(s) at j={j}"
            raise SplurgeParameterError(msg, details=f"depth {depth}")
        return FiniteDepthFn(j, values, mask)

    # Sequences

    def sequence(
        self,
        builder: Callable[[int], np.ndarray],
        *,
        depth: int,
        name: str = "f",
        index_range: tuple[int, int] | None = None,
    ) -> FunctionSequence:
        return FunctionSequence(self, builder, depth=depth, name=name, index_range=index_range)

    def stationary(
        self,
        factory: Callable[[int], FiniteDepthFn],
        *,
        name: str = "f",
    ) -> FunctionSequence:
        """Sequence built index by index from a FiniteDepthFn factory."""
        first = factory(0)
        return FunctionSequence(self, lambda j: factory(j).values, depth=first.depth, name=name)

    def named_sequence(
        self,
        literal: str | Mapping[str, float],
    ) -> FunctionSequence:
        """
        Parse an observable literal.

        Accepted forms: ``"first_symbol"``, ``"zero"``, ``"constant:<c>"``,
        ``"indicator:<word>"``, ``"linear:<a0>,<a1>,..."``, ``"scaled:<c>"`` (c times the first
        symbol) or an explicit table ``{"01": 0.3, ...}``.
        """
        if isinstance(literal, Mapping):
            table = dict(literal)
            return self.stationary(lambda j: self.from_table(j, table), name="table")

        token = literal.strip()
        head, _, arg = token.partition(":")
        try:
            if head == "first_symbol":
                return self.stationary(lambda j: self.first_symbol(j), name=token)
            if head == "zero":
                return self.stationary(lambda j: self.constant(j, 0.0), name=token)
            if head == "constant":
                value = float(arg)
                return self.stationary(lambda j: self.constant(j, value), name=token)
            if head == "scaled":
                factor = float(arg)
                return self.stationary(lambda j: self.scale(self.first_symbol(j), factor), name=token)
            if head == "indicator":
                return self.stationary(lambda j: self.indicator(j, arg), name=token)
            if head == "linear":
                coeffs = [float(a) for a in arg.split(",")]
                return self.stationary(lambda j: self.linear(j, coeffs), name=token)
        except ValueError as e:
            msg = f"Invalid observable literal '{literal}'"
            raise SplurgeParameterError(msg, details=str(e))

        msg = f"Unknown observable literal '{literal}'"
        raise SplurgeParameterError(
            msg,
            details="Expected first_symbol, zero, constant:<c>, scaled:<c>, indicator:<word>, linear:<coeffs>",
        )

    # Depth handling

    def embed(
        self,
        f: FiniteDepthFn,
        depth: int,
    ) -> FiniteDepthFn:
        """Same function viewed at a larger depth."""
        if depth == f.depth:
            return f
        self.check_depth(depth, f.base)
        mask = self.mask(f.base, depth)
        return FiniteDepthFn(f.base, pad_values(f.values, f.depth, mask), mask)

    def compose_shift(
        self,
        f: FiniteDepthFn,
    ) -> FiniteDepthFn:
        """f at j+1 composed with the shift: a function at j of depth D+1."""
        j = f.base - 1
        depth = self.check_depth(f.depth + 1, j)
        mask = self.mask(j, depth)
        values = np.broadcast_to(f.values[None, ...], mask.shape) * mask
        return FiniteDepthFn(j, values, mask)

    def _align(
        self,
        f: FiniteDepthFn,
        g: FiniteDepthFn,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if f.base != g.base:
            msg = "Operands live at different base indices"
            raise SplurgeBaseMismatchError(msg, details=f"bases {f.base} and {g.base}")
        depth = self.check_depth(max(f.depth, g.depth), f.base)
        mask = self.mask(f.base, depth)
        return pad_values(f.values, f.depth, mask), pad_values(g.values, g.depth, mask), mask

    # Algebra

    def add(
        self,
        f: FiniteDepthFn,
        g: FiniteDepthFn,
    ) -> FiniteDepthFn:
        a, b, mask = self._align(f, g)
        return FiniteDepthFn(f.base, a + b, mask)

    def mul(
        self,
        f: FiniteDepthFn,
        g: FiniteDepthFn,
    ) -> FiniteDepthFn:
        a, b, mask = self._align(f, g)
        return FiniteDepthFn(f.base, a * b, mask)

    def scale(
        self,
        f: FiniteDepthFn,
        factor: complex | float,
    ) -> FiniteDepthFn:
        return FiniteDepthFn(f.base, f.values * factor, f.mask)

    def exp_scaled(
        self,
        f: FiniteDepthFn,
        t: float,
    ) -> FiniteDepthFn:
        """Pointwise e^{i t f}; modulus one on admissible words for real f."""
        return FiniteDepthFn(f.base, np.exp(1j * t * f.values), f.mask)

    # Norms and pairing

    def holder_seminorm(
        self,
        f: FiniteDepthFn,
        alpha: float = DEFAULT_ALPHA,
    ) -> float:
        """
        Hoelder constant of the locally constant extension of f.

        Example:
            values f(00)=0, f(01)=1, f(10)=0, f(11)=0 on the full 2-shift with alpha=1 give 2.
        """
        if not 0 < alpha <= 1:
            msg = "Hoelder exponent must be in (0, 1]"
            raise SplurgeRangeError(msg, details=f"Got alpha={alpha}")
        return float(holder_seminorm_values(f.values, f.mask, alpha))

    def star_norm(
        self,
        f: FiniteDepthFn,
        alpha: float = DEFAULT_ALPHA,
        c1: float = 1.0,
    ) -> float:
        if c1 <= 0:
            msg = "C1 must be positive"
            raise SplurgeRangeError(msg, details=f"Got C1={c1}")
        return float(star_norm_values(f.values, f.mask, alpha, c1))

    def pair(
        self,
        functional: Functional,
        f: FiniteDepthFn,
    ) -> complex | float:
        """<functional, f> at the functional's depth."""
        if functional.base != f.base:
            msg = "Functional and function live at different base indices"
            raise SplurgeBaseMismatchError(msg, details=f"bases {functional.base} and {f.base}")
        if f.depth > functional.depth:
            msg = "Function is deeper than the functional"
            raise SplurgeParameterError(
                msg,
                details=f"function depth {f.depth}, functional depth {functional.depth}",
            )
        values = pad_values(f.values, f.depth, functional.mask)
        total = (functional.weights * values).sum()
        return complex(total) if np.iscomplexobj(total) else float(total)

    def uniform_functional(
        self,
        j: int,
        depth: int,
    ) -> Functional:
        mask = self.mask(j, depth)
        weights = mask / mask.sum()
        return Functional(j, weights, mask)
