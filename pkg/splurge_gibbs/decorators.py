"""
decorators.py

Decorators shared by the pipeline layers of the splurge_gibbs package.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

import logging
import time
from collections.abc import Callable
from functools import wraps
from typing import Any, TypeVar

from splurge_gibbs.exceptions import SplurgeGibbsError

F = TypeVar("F", bound=Callable[..., Any])

logger = logging.getLogger(__name__)


def timed_stage(
    stage: str,
) -> Callable[[F], F]:
    """
    Decorator to time a pipeline stage method and tag its errors with the stage name.

    The wall time in seconds is stored in ``self.timings[stage]`` when the instance has a
    ``timings`` mapping. Library errors raised inside the stage get ``stage=<name>`` prefixed
    to their details and are re-raised unchanged otherwise.

    Args:
        stage: Stage name used in logs, timings and error details

    Returns:
        Decorated instance method

    Example:
        @timed_stage("rpf")
        def run_rpf(self) -> None:
            ...
    """

    def decorator(func: F) -> F:
        @wraps(func)
        def wrapper(
            self: Any,
            *args: Any,
            **kwargs: Any,
        ) -> Any:
            logger.info("Stage '%s' started", stage)
            start = time.perf_counter()
            try:
                return func(self, *args, **kwargs)
            except SplurgeGibbsError as e:
                e.details = f"stage={stage}" if not e.details else f"stage={stage}; {e.details}"
                logger.error("Stage '%s' failed: %s (%s)", stage, e.message, e.details)
                raise
            finally:
                elapsed = time.perf_counter() - start
                timings = getattr(self, "timings", None)
                if isinstance(timings, dict):
                    timings[stage] = elapsed
                logger.info("Stage '%s' finished in %.3f s", stage, elapsed)

        return wrapper  # type: ignore[return-value]

    return decorator
