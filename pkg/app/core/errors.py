"""
Exception hierarchy shared by the engine, the services and the API.

Every error raised on purpose derives from LiquidityLabError so callers can
tell model violations apart from programming errors.
"""

from typing import Any, Optional, Sequence


class LiquidityLabError(Exception):
    """Base class for expected failures."""


class InvalidInputError(LiquidityLabError, ValueError):
    """Argument violates a documented precondition."""


class OutOfRangeError(LiquidityLabError):
    """Exchange rate outside the span of the price grid."""

    def __init__(self, rate: float, lower: float, upper: float):
        self.rate = rate
        self.lower = lower
        self.upper = upper
        super().__init__(f"rate {rate!r} outside grid span [{lower!r}, {upper!r}]")


class DegeneratePositionError(LiquidityLabError):
    """Liquidity position whose unit cost is not positive."""


class PartialFillError(LiquidityLabError):
    """Swap larger than what the pool can execute."""

    def __init__(self, requested: float, max_executable: float):
        self.requested = requested
        self.max_executable = max_executable
        super().__init__(
            f"swap of {requested!r} token B exceeds pool capacity; "
            f"at most {max_executable!r} can be executed"
        )


class DensityFitError(LiquidityLabError):
    """Swap samples too few or too degenerate for a kernel estimate."""


class ZeroMassError(LiquidityLabError):
    """Distribution with no mass passed where a normalized one is needed."""


class UndefinedMetricError(LiquidityLabError):
    """Metric undefined for the given inputs (e.g. constant reference)."""


class NonConvergenceError(LiquidityLabError):
    """Iteration cap reached before the error fell below the threshold."""

    def __init__(self, message: str, best_iterate: Any = None, errors: Optional[Sequence[float]] = None):
        self.best_iterate = best_iterate
        self.errors = list(errors or [])
        super().__init__(message)


class SnapshotParseError(LiquidityLabError):
    """Input file that does not follow its documented layout."""

    def __init__(self, path: str, line: Optional[int], reason: str):
        self.path = path
        self.line = line
        self.reason = reason
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {reason}")


class ConfigVersionError(LiquidityLabError):
    """Scenario file written for an unsupported schema version."""
