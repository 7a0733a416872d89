"""
Custom exceptions for splurge-gibbs package.

This module provides a hierarchy of custom exceptions for better error handling
and more specific error messages throughout the package. Every failure mode of the
symbolic, operator, distribution and model layers maps to exactly one class here.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""


class SplurgeGibbsError(Exception):
    """Base exception for all splurge-gibbs errors."""

    def __init__(
        self,
        message: str,
        *,
        details: str | None = None,
    ) -> None:
        """
        Initialize SplurgeGibbsError.

        Args:
            message: Primary error message
            details: Additional error details
        """
        self.message = message
        self.details = details
        super().__init__(self.message)


class SplurgeNumericalWarning(UserWarning):
    """Warning for recoverable numerical conditions (clipped masses, loose tails)."""


# Validation family


class SplurgeValidationError(SplurgeGibbsError):
    """Raised when structural validation fails."""


class SplurgeParameterError(SplurgeValidationError):
    """Raised when function parameters are invalid."""


class SplurgeRangeError(SplurgeValidationError):
    """Raised when values are outside expected ranges."""


class SplurgeShapeMismatchError(SplurgeValidationError):
    """Raised when adjacency or value tables disagree with alphabet sizes."""


class SplurgeDeadSymbolError(SplurgeValidationError):
    """Raised when an adjacency matrix has an all-zero row or column."""


class SplurgeNotMixingError(SplurgeValidationError):
    """Raised when no aperiodicity window exists below the configured cap."""


class SplurgeBaseMismatchError(SplurgeValidationError):
    """Raised when two words or functions live at different base indices."""


class SplurgeInadmissibleError(SplurgeValidationError):
    """Raised when a word violates the adjacency constraints."""


class SplurgeIndexOutOfWindowError(SplurgeValidationError):
    """Raised when an index falls outside the solved or declared window."""


class SplurgeDepthOverflowError(SplurgeValidationError):
    """Raised when a function table would exceed the configured depth cap."""


# Numerical family


class SplurgeNumericalError(SplurgeGibbsError):
    """Base exception for numerical failures."""


class SplurgeNoConvergenceError(SplurgeNumericalError):
    """Raised when an iteration fails to contract geometrically."""


class SplurgeDegenerateVarianceError(SplurgeNumericalError):
    """Raised when a statistic needs more spread than the law provides."""


class SplurgeGridTooCoarseError(SplurgeNumericalError):
    """Raised when a frequency grid is coarser than the resolution limit."""


# Distribution family


class SplurgeDistributionError(SplurgeGibbsError):
    """Base exception for distribution and decomposition errors."""


class SplurgeBadDensityError(SplurgeDistributionError):
    """Raised when an initial density is negative or not normalized."""


class SplurgeNotIntegerValuedError(SplurgeDistributionError):
    """Raised when a lattice operation receives a non-integer observable."""


class SplurgeRangeOverflowError(SplurgeDistributionError):
    """Raised when a value range or atom count exceeds its cap."""


class SplurgeSpanMismatchError(SplurgeDistributionError):
    """Raised when the detected lattice span differs from the one required."""


class SplurgeDecompositionInvalidError(SplurgeDistributionError):
    """Raised when a supplied reducible decomposition fails verification."""


# Model family


class SplurgeModelError(SplurgeGibbsError):
    """Base exception for model construction errors."""


class SplurgeNotStochasticError(SplurgeModelError):
    """Raised when transition rows do not sum to one."""


class SplurgeNotEllipticError(SplurgeModelError):
    """Raised when a chain violates the lower bound or uniform ellipticity."""


class SplurgeNotPositiveError(SplurgeModelError):
    """Raised when a cocycle matrix has a non-positive entry."""


class SplurgeNotExpandingError(SplurgeModelError):
    """Raised when an interval map branch has slope of modulus at most one."""


class SplurgeNotMarkovError(SplurgeModelError):
    """Raised when a branch image is not a union of next-level cells."""


class SplurgeIncompatibleReferencePastError(SplurgeModelError):
    """Raised when a reference past cannot be joined to the present symbols."""


# Configuration and I/O


class SplurgeConfigurationError(SplurgeGibbsError):
    """Raised when configuration is invalid."""


class SplurgeFileOperationError(SplurgeGibbsError):
    """Raised when reading or writing an artifact fails."""
