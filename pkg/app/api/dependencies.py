from contextlib import contextmanager
from typing import Iterator

from fastapi import HTTPException, status

from app.core.errors import (
    DegeneratePositionError,
    DensityFitError,
    LiquidityLabError,
    NonConvergenceError,
    OutOfRangeError,
    PartialFillError,
    SnapshotParseError,
    UndefinedMetricError,
    ZeroMassError,
)
from app.core.config import SIM_INLINE_BUDGET
from app.core.logging import capture_error
from app.helpers.getters import getDefaultPaths
from app.schemas.scenario import ScenarioConfig

# ==================== Error mapping ====================

_UNPROCESSABLE = (
    OutOfRangeError,
    DegeneratePositionError,
    PartialFillError,
    DensityFitError,
    ZeroMassError,
    UndefinedMetricError,
    SnapshotParseError,
)


def error_status(error: LiquidityLabError) -> int:
    """HTTP status for a domain error"""
    if isinstance(error, _UNPROCESSABLE):
        return status.HTTP_422_UNPROCESSABLE_ENTITY
    if isinstance(error, NonConvergenceError):
        return status.HTTP_409_CONFLICT
    return status.HTTP_400_BAD_REQUEST


def error_detail(error: LiquidityLabError) -> dict:
    detail = {"error": type(error).__name__, "message": str(error)}
    if isinstance(error, PartialFillError):
        detail["max_executable"] = float(error.max_executable)
    return detail


@contextmanager
def domain_errors(operation: str) -> Iterator[None]:
    """
    Translate engine errors into HTTP errors.

    Usage:
        with domain_errors("swap"):
            outcome = execute_swap(state, x)
    """
    try:
        yield
    except LiquidityLabError as e:
        raise HTTPException(status_code=error_status(e), detail=error_detail(e))
    except HTTPException:
        raise
    except Exception as e:
        capture_error(e, context={"operation": operation})
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail={"error": "InternalError", "message": f"{operation} failed"},
        )


# ==================== Scenario Dependencies ====================

def scenario_cost(config: ScenarioConfig) -> int:
    """Rough Monte-Carlo work of a scenario: paths x blocks x candidate lanes."""
    paths = config.simulation.n_paths or getDefaultPaths()
    d = len(config.pool.liquidity) if config.pool is not None else 1
    lanes = d * (d + 1) // 2 if config.game.mode in ("single", "nplayer") else len(config.game.beliefs)
    return paths * config.simulation.horizon * lanes


def require_inline_budget(config: ScenarioConfig) -> ScenarioConfig:
    """Reject scenarios too large to run inside a request."""
    cost = scenario_cost(config)
    if cost > SIM_INLINE_BUDGET:
        raise HTTPException(
            status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE,
            detail=f"Scenario needs about {cost} lane-path-blocks; submit it to the worker instead",
        )
    return config
