"""
Sequential subshifts of finite type.

This module defines the symbolic layer: time-dependent alphabets and 0/1 adjacency
matrices, the extension rule that supplies structure outside the declared window,
admissible words (cylinders), the shift metric and the aperiodicity check.

Indexing conventions:
    - alphabets are indexed by j in [0, N], adjacency matrices A^(j) by j in [0, N-1];
    - outside the window the extension rule maps a transition index to one inside it,
      and the alphabet at j is the row alphabet of the mapped transition;
    - value tensors over depth-D words at j have shape (d_j, ..., d_{j+D-1}) and are laid
      out in C order, which is lexicographic order on words.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from splurge_gibbs.exceptions import (
    SplurgeBaseMismatchError,
    SplurgeDeadSymbolError,
    SplurgeInadmissibleError,
    SplurgeNotMixingError,
    SplurgeParameterError,
    SplurgeRangeError,
    SplurgeShapeMismatchError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtensionRule:
    """
    Rule prescribing alphabets and adjacency matrices outside the window.

    ``periodic(p)`` repeats the last p transitions to the right of the window and the first p
    to the left; ``frozen`` is ``periodic(1)``.
    """

    PERIODIC = "periodic"
    FROZEN = "frozen"

    kind: str = PERIODIC
    period: int = 1

    def __post_init__(self) -> None:
        if self.kind not in (self.PERIODIC, self.FROZEN):
            msg = f"Unknown extension rule '{self.kind}'"
            raise SplurgeParameterError(msg, details="Expected 'periodic:<p>' or 'frozen'")
        if self.period < 1:
            msg = "Extension period must be >= 1"
            raise SplurgeRangeError(msg, details=f"Got period={self.period}")
        if self.kind == self.FROZEN and self.period != 1:
            object.__setattr__(self, "period", 1)

    @classmethod
    def parse(cls, text: str) -> ExtensionRule:
        """
        Parse an extension rule literal.

        Example:
            >>> ExtensionRule.parse("periodic:2")
            ExtensionRule(kind='periodic', period=2)
        """
        token = text.strip().lower()
        if token == cls.FROZEN:
            return cls(kind=cls.FROZEN, period=1)
        if token == cls.PERIODIC:
            return cls(kind=cls.PERIODIC, period=1)
        if token.startswith(f"{cls.PERIODIC}:"):
            try:
                period = int(token.split(":", 1)[1])
            except ValueError as e:
                msg = f"Invalid extension period in '{text}'"
                raise SplurgeParameterError(msg, details=str(e))
            return cls(kind=cls.PERIODIC, period=period)

        msg = f"Unknown extension rule '{text}'"
        raise SplurgeParameterError(msg, details="Expected 'periodic:<p>' or 'frozen'")

    def transition_index(
        self,
        j: int,
        n_transitions: int,
    ) -> int:
        """Map any integer transition index to one inside [0, n_transitions - 1]."""
        if 0 <= j < n_transitions:
            return j
        p = self.period
        if j >= n_transitions:
            return n_transitions - p + ((j - n_transitions) % p)
        return j % p

    def __str__(self) -> str:
        if self.kind == self.FROZEN:
            return self.FROZEN
        return f"{self.PERIODIC}:{self.period}"


@dataclass(frozen=True)
class Word:
    """An admissible (or candidate) word s_j ... s_{j+L-1} naming a cylinder at base j."""

    base: int
    symbols: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.symbols)

    @classmethod
    def from_string(
        cls,
        base: int,
        text: str,
    ) -> Word:
        """Build a word from a compact digit string such as ``"0110"``."""
        try:
            return cls(base=base, symbols=tuple(int(ch) for ch in text))
        except ValueError as e:
            msg = f"Invalid word literal '{text}'"
            raise SplurgeParameterError(msg, details=str(e))

    def concat(
        self,
        other: Word,
    ) -> Word:
        """Concatenate a word that starts where this one ends."""
        if other.base != self.base + len(self):
            msg = "Words are not contiguous"
            raise SplurgeBaseMismatchError(
                msg,
                details=f"Expected base {self.base + len(self)}, got {other.base}",
            )
        return Word(base=self.base, symbols=self.symbols + other.symbols)

    def __str__(self) -> str:
        if all(s < 10 for s in self.symbols):
            return "".join(str(s) for s in self.symbols)
        return ".".join(str(s) for s in self.symbols)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """
    Declarative description of a sequential SFT over the window [0, N].

    Attributes:
        alphabet_sizes: d_0, ..., d_N
        adjacency: A^(0), ..., A^(N-1); A^(j) has shape d_j x d_{j+1}
        extension: rule for indices outside the window
    """

    alphabet_sizes: tuple[int, ...]
    adjacency: tuple[np.ndarray, ...]
    extension: ExtensionRule = field(default_factory=ExtensionRule)

    @property
    def window(self) -> tuple[int, int]:
        return 0, len(self.adjacency)

    @classmethod
    def constant(
        cls,
        adjacency: Any,
        *,
        extension: ExtensionRule | None = None,
    ) -> SystemSpec:
        """Single-matrix system on the window [0, 1], frozen outside."""
        matrix = np.asarray(adjacency, dtype=np.int64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            msg = "Constant adjacency must be a square matrix"
            raise SplurgeShapeMismatchError(msg, details=f"Got shape {matrix.shape}")
        return cls(
            alphabet_sizes=(matrix.shape[0], matrix.shape[0]),
            adjacency=(matrix,),
            extension=extension or ExtensionRule(ExtensionRule.FROZEN),
        )

    @classmethod
    def full_shift(
        cls,
        symbols: int,
    ) -> SystemSpec:
        """Full shift on ``symbols`` letters."""
        return cls.constant(np.ones((symbols, symbols), dtype=np.int64))

    @classmethod
    def from_dict(
        cls,
        data: dict[str, Any],
    ) -> SystemSpec:
        """
        Build a spec from its JSON form.

        Example:
            {"window": [0, 1], "alphabet_sizes": [2, 2], "adjacency": [[[1, 1], [1, 0]]],
             "extension": "periodic:1"}
        """
        try:
            window = data.get("window")
            sizes = tuple(int(d) for d in data["alphabet_sizes"])
            matrices = tuple(np.asarray(a, dtype=np.int64) for a in data["adjacency"])
            extension = ExtensionRule.parse(str(data.get("extension", "periodic:1")))
        except (KeyError, TypeError, ValueError) as e:
            msg = "Malformed system document"
            raise SplurgeParameterError(msg, details=str(e))

        if window is not None and (len(window) != 2 or int(window[0]) != 0 or int(window[1]) != len(matrices)):
            msg = "Window does not match the number of adjacency matrices"
            raise SplurgeShapeMismatchError(
                msg,
                details=f"window={window}, matrices={len(matrices)}",
            )
        return cls(alphabet_sizes=sizes, adjacency=matrices, extension=extension)

    def to_dict(self) -> dict[str, Any]:
        return {
            "window": list(self.window),
            "alphabet_sizes": list(self.alphabet_sizes),
            "adjacency": [a.tolist() for a in self.adjacency],
            "extension": str(self.extension),
        }


class ValidatedSystem:
    """
    A SystemSpec that passed shape and positivity checks.

    Only :meth:`SymbolicHelper.validate` constructs instances. Accessors accept any integer
    index and resolve it through the extension rule.
    """

    def __init__(
        self,
        spec: SystemSpec,
        *,
        d_max: int,
    ) -> None:
        self._spec = spec
        self._d_max = d_max
        self._n = len(spec.adjacency)
        self._adjacency = tuple(a.astype(bool) for a in spec.adjacency)
        self._masks: dict[tuple[int, int], np.ndarray] = {}

    @property
    def spec(self) -> SystemSpec:
        return self._spec

    @property
    def n_transitions(self) -> int:
        return self._n

    @property
    def d_max(self) -> int:
        return self._d_max

    @property
    def extension(self) -> ExtensionRule:
        return self._spec.extension

    @property
    def is_full(self) -> bool:
        """True when every adjacency matrix is all ones."""
        return all(bool(a.all()) for a in self._adjacency)

    def transition_index(self, j: int) -> int:
        return self._spec.extension.transition_index(j, self._n)

    def alphabet_size(self, j: int) -> int:
        if 0 <= j <= self._n:
            return self._spec.alphabet_sizes[j]
        return self._spec.alphabet_sizes[self.transition_index(j)]

    def adjacency(self, j: int) -> np.ndarray:
        """Boolean adjacency matrix A^(j) resolved through the extension rule."""
        return self._adjacency[self.transition_index(j)]

    def shape(
        self,
        j: int,
        depth: int,
    ) -> tuple[int, ...]:
        return tuple(self.alphabet_size(j + k) for k in range(depth))

    def mask(
        self,
        j: int,
        depth: int,
    ) -> np.ndarray:
        """Boolean tensor marking admissible words of the given depth at j."""
        key = (j, depth)
        cached = self._masks.get(key)
        if cached is not None:
            return cached

        if depth == 0:
            result = np.ones((), dtype=bool)
        else:
            result = np.ones(self.alphabet_size(j), dtype=bool)
            for k in range(1, depth):
                result = result[..., :, None] & self.adjacency(j + k - 1)
        result.setflags(write=False)
        self._masks[key] = result
        return result

    def is_admissible(self, word: Word) -> bool:
        for k, s in enumerate(word.symbols):
            if not 0 <= s < self.alphabet_size(word.base + k):
                return False
        return all(
            self.adjacency(word.base + k)[word.symbols[k], word.symbols[k + 1]] for k in range(len(word) - 1)
        )

    def require_admissible(self, word: Word) -> Word:
        if not self.is_admissible(word):
            msg = f"Word {word} at base {word.base} is not admissible"
            raise SplurgeInadmissibleError(msg, details=f"symbols={word.symbols}")
        return word

    def least_extension(
        self,
        word: Word,
        extra: int,
    ) -> Word:
        """Append the lexicographically least admissible continuation of ``extra`` symbols."""
        symbols = list(word.symbols)
        for _ in range(extra):
            j = word.base + len(symbols) - 1
            row = self.adjacency(j)[symbols[-1]]
            symbols.append(int(np.flatnonzero(row)[0]))
        return Word(base=word.base, symbols=tuple(symbols))

    def __repr__(self) -> str:
        return f"ValidatedSystem(window=[0, {self._n}], alphabets={self._spec.alphabet_sizes}, extension={self.extension})"


class SymbolicHelper:
    """
    Structural operations on sequential subshifts of finite type.

    Attributes:
        DEFAULT_M_CAP (int): Largest aperiodicity window searched
        DEFAULT_D_MAX (int): Largest alphabet size accepted
        DEFAULT_LENGTH_CAP (int): Longest word length enumerated
    """

    DEFAULT_M_CAP: int = 64
    DEFAULT_D_MAX: int = 16
    DEFAULT_LENGTH_CAP: int = 24

    @classmethod
    def validate(
        cls,
        spec: SystemSpec,
        *,
        d_max: int = DEFAULT_D_MAX,
    ) -> ValidatedSystem:
        """
        Check adjacency shapes, row/column positivity and extension consistency.

        Raises:
            SplurgeShapeMismatchError: If matrix dimensions disagree with alphabet sizes
            SplurgeDeadSymbolError: If a matrix has an all-zero row or column
            SplurgeRangeError: If an alphabet size is outside [1, d_max]

        Example:
            >>> SymbolicHelper.validate(SystemSpec.full_shift(2))
            ValidatedSystem(window=[0, 1], alphabets=(2, 2), extension=frozen)
        """
        n = len(spec.adjacency)
        if n < 1:
            msg = "A system needs at least one adjacency matrix"
            raise SplurgeShapeMismatchError(msg, details="window must be [0, N] with N >= 1")
        if len(spec.alphabet_sizes) != n + 1:
            msg = "alphabet_sizes must have one entry per index in [0, N]"
            raise SplurgeShapeMismatchError(
                msg,
                details=f"Expected {n + 1} sizes, got {len(spec.alphabet_sizes)}",
            )

        for j, d in enumerate(spec.alphabet_sizes):
            if not 1 <= d <= d_max:
                msg = f"Alphabet size at j={j} out of range"
                raise SplurgeRangeError(msg, details=f"Got d={d}, allowed 1..{d_max}")

        for j, matrix in enumerate(spec.adjacency):
            expected = (spec.alphabet_sizes[j], spec.alphabet_sizes[j + 1])
            if matrix.shape != expected:
                msg = f"Adjacency A^({j}) has the wrong shape"
                raise SplurgeShapeMismatchError(msg, details=f"Expected {expected}, got {matrix.shape}")
            if not np.isin(matrix, (0, 1)).all():
                msg = f"Adjacency A^({j}) must contain only 0/1 entries"
                raise SplurgeShapeMismatchError(msg, details=f"j={j}")

            dead_rows = np.flatnonzero(matrix.sum(axis=1) == 0)
            if dead_rows.size:
                msg = f"Dead symbol at j={j}: symbol {int(dead_rows[0])} has no successor"
                raise SplurgeDeadSymbolError(msg, details=f"j={j}, axis=row, symbol={int(dead_rows[0])}")
            dead_cols = np.flatnonzero(matrix.sum(axis=0) == 0)
            if dead_cols.size:
                msg = f"Dead symbol at j={j + 1}: symbol {int(dead_cols[0])} has no predecessor"
                raise SplurgeDeadSymbolError(msg, details=f"j={j}, axis=column, symbol={int(dead_cols[0])}")

        p = spec.extension.period
        if p > n:
            msg = "Extension period exceeds the number of transitions"
            raise SplurgeRangeError(msg, details=f"period={p}, transitions={n}")
        sizes = spec.alphabet_sizes
        if sizes[n] != sizes[n - p] or sizes[0] != sizes[p]:
            msg = "Extension rule is incompatible with the boundary alphabets"
            raise SplurgeShapeMismatchError(
                msg,
                details=f"Need d_N == d_(N-p) and d_0 == d_p for period {p}",
            )

        system = ValidatedSystem(spec, d_max=d_max)
        logger.debug("Validated %r", system)
        return system

    @classmethod
    def aperiodicity_window(
        cls,
        system: ValidatedSystem,
        *,
        m_cap: int = DEFAULT_M_CAP,
    ) -> int:
        """
        Smallest M >= 0 with A^(j)...A^(j+M) entrywise positive for every start index.

        Start indices cover the window plus one extension period to the left, which is enough
        to see every distinct product under the extension rule.

        Raises:
            SplurgeNotMixingError: If no M <= m_cap works
        """
        starts = list(range(-system.extension.period, system.n_transitions))
        products = {s: system.adjacency(s).astype(np.int64) for s in starts}

        for m in range(m_cap + 1):
            if all(bool((products[s] > 0).all()) for s in starts):
                logger.debug("Aperiodicity window M=%d", m)
                return m
            for s in starts:
                step = products[s] @ system.adjacency(s + m + 1).astype(np.int64)
                products[s] = (step > 0).astype(np.int64)

        msg = f"No aperiodicity window up to M_cap={m_cap}"
        raise SplurgeNotMixingError(msg, details=f"m_cap={m_cap}")

    @classmethod
    def enumerate_words(
        cls,
        system: ValidatedSystem,
        j: int,
        length: int,
        *,
        length_cap: int = DEFAULT_LENGTH_CAP,
    ) -> list[Word]:
        """
        All admissible words of the given length at base j, in lexicographic order.

        Example:
            >>> golden = SymbolicHelper.validate(SystemSpec.constant([[1, 1], [1, 0]]))
            >>> [str(w) for w in SymbolicHelper.enumerate_words(golden, 0, 3)]
            ['000', '001', '010', '100', '101']
        """
        if not 1 <= length <= length_cap:
            msg = "Word length out of range"
            raise SplurgeRangeError(msg, details=f"Got length={length}, allowed 1..{length_cap}")
        mask = system.mask(j, length)
        return [Word(base=j, symbols=tuple(int(s) for s in row)) for row in np.argwhere(mask)]

    @classmethod
    def word_count(
        cls,
        system: ValidatedSystem,
        j: int,
        length: int,
    ) -> int:
        """Number of admissible words from the matrix-product formula."""
        if length == 1:
            return system.alphabet_size(j)
        product = system.adjacency(j).astype(np.int64)
        for k in range(1, length - 1):
            product = product @ system.adjacency(j + k).astype(np.int64)
        return int(product.sum())

    @staticmethod
    def metric(
        x: Word,
        y: Word,
    ) -> float:
        """
        Shift metric 2^{-k} with k the first disagreement position; 0 for identical words.

        Raises:
            SplurgeBaseMismatchError: If the words live at different base indices
            SplurgeParameterError: If the words have different lengths
        """
        if x.base != y.base:
            msg = "Cannot compare words at different base indices"
            raise SplurgeBaseMismatchError(msg, details=f"bases {x.base} and {y.base}")
        if len(x) != len(y):
            msg = "Cannot compare words of different lengths"
            raise SplurgeParameterError(msg, details=f"lengths {len(x)} and {len(y)}")

        for k, (a, b) in enumerate(zip(x.symbols, y.symbols, strict=True)):
            if a != b:
                return 2.0**-k
        return 0.0

    @staticmethod
    def words_to_array(words: Iterable[Word] | Sequence[Word]) -> np.ndarray:
        """Stack equal-length words into an integer array of shape (count, length)."""
        rows = [w.symbols for w in words]
        if not rows:
            return np.zeros((0, 0), dtype=np.int64)
        return np.asarray(rows, dtype=np.int64)
