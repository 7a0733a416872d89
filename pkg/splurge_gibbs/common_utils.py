"""
Common utility functions for splurge-gibbs package.

This module provides reusable validation and array helpers shared by the symbolic,
operator and model layers so that error messages stay consistent.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from collections.abc import Sequence
from typing import Any, TypeVar

import numpy as np

from splurge_gibbs.exceptions import SplurgeParameterError, SplurgeRangeError

T = TypeVar("T")


def safe_dict_access(
    data: dict[str, T],
    key: str,
    *,
    item_name: str = "key",
) -> T:
    """
    Safely access dictionary value by key with helpful error messages.

    Args:
        data: Dictionary to access
        key: Key to access
        item_name: Name of items for error messages

    Returns:
        Value for key

    Raises:
        SplurgeParameterError: If key not found
    """
    if key in data:
        return data[key]

    available_keys = sorted(data.keys())[:8]
    key_hint = f"Available keys: {available_keys}"
    if len(data) > 8:
        key_hint += f" (and {len(data) - 8} more)"

    msg = f"{item_name} '{key}' not found"
    raise SplurgeParameterError(
        msg,
        details=key_hint,
    )


def as_float_array(
    data: Any,
    *,
    param_name: str = "data",
    ndim: int | None = None,
) -> np.ndarray:
    """
    Convert data to a finite float64 array.

    Args:
        data: Array-like input
        param_name: Parameter name for error messages
        ndim: Required number of dimensions, if any

    Returns:
        Float64 numpy array

    Raises:
        SplurgeParameterError: If data is not numeric, has the wrong rank or is not finite
    """
    try:
        array = np.asarray(data, dtype=np.float64)
    except (TypeError, ValueError) as e:
        msg = f"{param_name} must be numeric"
        raise SplurgeParameterError(
            msg,
            details=str(e),
        )

    if ndim is not None and array.ndim != ndim:
        msg = f"{param_name} must have {ndim} dimension(s)"
        raise SplurgeParameterError(
            msg,
            details=f"Got shape {array.shape}",
        )

    if not np.all(np.isfinite(array)):
        msg = f"{param_name} contains non-finite values"
        raise SplurgeParameterError(
            msg,
            details=f"Shape {array.shape}",
        )

    return array


def validate_positive(
    value: float,
    *,
    param_name: str = "value",
    allow_zero: bool = False,
) -> float:
    """
    Validate that a scalar is positive (or nonnegative).

    Raises:
        SplurgeRangeError: If the value is out of range
    """
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        msg = f"{param_name} must be {bound}"
        raise SplurgeRangeError(
            msg,
            details=f"Got {param_name}={value}",
        )
    return value


def validate_probability_vector(
    vector: Any,
    *,
    param_name: str = "vector",
    atol: float = 1e-9,
) -> np.ndarray:
    """
    Validate a probability vector (nonnegative, sums to one).

    Raises:
        SplurgeParameterError: If the vector is not a probability vector
    """
    array = as_float_array(vector, param_name=param_name, ndim=1)
    if np.any(array < 0) or abs(float(array.sum()) - 1.0) > atol:
        msg = f"{param_name} is not a probability vector"
        raise SplurgeParameterError(
            msg,
            details=f"min={array.min():.3g}, sum={array.sum():.12g}",
        )
    return array


def linear_trend(
    x: Sequence[float] | np.ndarray,
    y: Sequence[float] | np.ndarray,
) -> tuple[float, float, float]:
    """
    Least-squares line through (x, y).

    Returns:
        Tuple of (slope, intercept, r_squared); r_squared is 1.0 for exact or constant data
    """
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.size < 2:
        msg = "linear_trend needs at least two points"
        raise SplurgeParameterError(msg, details=f"Got {xs.size}")

    slope, intercept = np.polyfit(xs, ys, 1)
    residual = ys - (slope * xs + intercept)
    total = float(np.sum((ys - ys.mean()) ** 2))
    r_squared = 1.0 if total <= 0.0 else 1.0 - float(np.sum(residual**2)) / total
    return float(slope), float(intercept), r_squared
