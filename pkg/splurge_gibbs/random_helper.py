"""
Seeded random number generation for trial functions, random queries and samplers.

Every random draw in the package goes through a numpy Generator built from a seed and an
optional stream number, so results are reproducible and independent of the order or the
thread in which streams are consumed.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from __future__ import annotations

import numpy as np

from splurge_gibbs.exceptions import SplurgeInadmissibleError, SplurgeRangeError
from splurge_gibbs.symbolic import ValidatedSystem


class RandomHelper:
    """
    A utility class for reproducible random values.

    Attributes:
        DEFAULT_SEED (int): Seed used when callers do not supply one
    """

    DEFAULT_SEED: int = 0

    @staticmethod
    def generator(
        seed: int = DEFAULT_SEED,
        *,
        stream: int | None = None,
    ) -> np.random.Generator:
        """
        Counter-based generator for (seed, stream).

        Distinct streams of the same seed are statistically independent; the same pair always
        yields the same sequence.

        Example:
            >>> a = RandomHelper.generator(7, stream=3).random(2)
            >>> b = RandomHelper.generator(7, stream=3).random(2)
            >>> bool((a == b).all())
            True
        """
        if seed < 0:
            msg = "seed must be >= 0"
            raise SplurgeRangeError(msg, details=f"Got seed={seed}")
        spawn_key = () if stream is None else (stream,)
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=spawn_key)))

    @classmethod
    def uniform_block(
        cls,
        seed: int,
        stream: int,
        size: int,
    ) -> np.ndarray:
        """``size`` uniforms on [0, 1) from one stream."""
        return cls.generator(seed, stream=stream).random(size)

    @staticmethod
    def complex_unit(
        shape: tuple[int, ...],
        *,
        rng: np.random.Generator,
    ) -> np.ndarray:
        """Values e^{2 pi i U} with independent uniform U."""
        return np.exp(2j * np.pi * rng.random(shape))

    @staticmethod
    def random_walk(
        system: ValidatedSystem,
        j: int,
        length: int,
        *,
        rng: np.random.Generator,
        after: int | None = None,
    ) -> tuple[int, ...]:
        """
        Uniformly chosen successor symbols of an admissible walk of the given length at j.

        ``after`` is the symbol at j-1 the walk must follow; None leaves the first symbol free.
        """
        symbols: list[int] = []
        previous = after
        for k in range(length):
            index = j + k
            if previous is None:
                choices = np.arange(system.alphabet_size(index))
            else:
                choices = np.flatnonzero(system.adjacency(index - 1)[previous])
            if choices.size == 0:
                msg = f"No admissible continuation at j={index}"
                raise SplurgeInadmissibleError(msg, details=f"after symbol {previous}")
            previous = int(rng.choice(choices))
            symbols.append(previous)
        return tuple(symbols)
