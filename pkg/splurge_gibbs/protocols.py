"""
Protocol definitions for splurge-gibbs package.

This module defines Protocol classes for the two contracts shared across layers: an
index-dependent observable that can be evaluated along sampled paths, and a stage report
that serializes to one JSON document plus CSV rows.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from collections.abc import Mapping, Sequence
from typing import Any, Protocol, runtime_checkable

import numpy as np


@runtime_checkable
class ObservableProtocol(Protocol):
    """
    Protocol for index-dependent finite-depth function sequences.

    Implementations return, for every integer index j, the value tensor of f_j over
    admissible words of length ``depth`` starting at j.
    """

    @property
    def depth(self) -> int:
        """Maximal depth over the sequence."""
        ...

    @property
    def name(self) -> str:
        """Human readable label."""
        ...

    def native(self, j: int) -> np.ndarray:
        """Value tensor of f_j at the sequence depth."""
        ...

    def values(self, j: int, depth: int) -> np.ndarray:
        """Value tensor of f_j embedded at the given depth."""
        ...


@runtime_checkable
class ReportProtocol(Protocol):
    """Protocol for stage reports written as a JSON summary and a CSV table."""

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready summary."""
        ...

    def to_rows(self) -> Sequence[Mapping[str, Any]]:
        """Flat records, one per CSV row."""
        ...
