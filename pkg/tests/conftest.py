"""
Global test fixtures and configuration.

This module provides base fixtures for all tests:
- Test environment (eager Celery, no Sentry) set before the app is imported
- HTTP client over the ASGI app
- The small reference pools every module tests against
- Simulation contexts small enough for unit tests
"""

import os
import pytest
from typing import AsyncGenerator
from httpx import ASGITransport, AsyncClient

# Set test environment variables BEFORE importing app
os.environ["MODE"] = "test"
os.environ["SENTRY_DSN"] = ""  # Disable Sentry in tests
os.environ["CELERY_TASK_ALWAYS_EAGER"] = "true"
os.environ["CELERY_BROKER_URL"] = "memory://"
os.environ["CELERY_RESULT_BACKEND"] = "cache+memory://"
os.environ["SIM_SEED"] = "20231129"
os.environ["SIM_THREADS"] = "1"
os.environ["SIM_N_PATHS"] = "64"

from app.main import app
from app.engine.pool import PoolState, PriceGrid
from app.engine.stochastic import ArrivalModel, JointSwapDensity
from tests.factories import ContextFactory

TOY_POINTS = [1.0, 1.21, 1.44, 1.69, 1.96, 2.25, 2.56]
# Liquidity of the six-tick toy pool before an LP arrives
TOY_LIQUIDITY = [70.0, 90.0, 111.052, 113.75, 105.0, 90.0]
# Liquidity of the six-tick pool used for the swap walk-throughs
SWAP_LIQUIDITY = [100.0, 100.0, 100.956, 113.75, 131.25, 150.0]
TOY_RATE = 1.6


# ==================== FastAPI Client ====================

@pytest.fixture(scope="function")
async def client() -> AsyncGenerator[AsyncClient, None]:
    """
    Create HTTP client for testing FastAPI endpoints.

    Requests go straight to the ASGI app; no server is started.
    """
    async with AsyncClient(transport=ASGITransport(app=app), base_url="http://test") as ac:
        yield ac


# ==================== Pools ====================

@pytest.fixture
def toy_grid() -> PriceGrid:
    return PriceGrid(TOY_POINTS)


@pytest.fixture
def toy_pool(toy_grid) -> PoolState:
    """Six-tick pool at p* = 1.6 before an LP adds liquidity."""
    return PoolState(toy_grid, TOY_LIQUIDITY, TOY_RATE)


@pytest.fixture
def swap_pool(toy_grid) -> PoolState:
    """Six-tick pool at p* = 1.6 holding 26.553 token B in total, fee-free."""
    return PoolState(toy_grid, SWAP_LIQUIDITY, TOY_RATE)


@pytest.fixture
def fee_pool(toy_grid) -> PoolState:
    """Toy pool with a 5 bp fee."""
    return PoolState(toy_grid, TOY_LIQUIDITY, TOY_RATE, fee_rate=0.0005)


@pytest.fixture
def pool_json():
    """The toy pool as the API expects it."""
    return {"points": TOY_POINTS, "liquidity": TOY_LIQUIDITY, "pool_rate": TOY_RATE, "fee_rate": 0.0005}


# ==================== Simulation ====================

@pytest.fixture
def context():
    """
    Four-tick context with a 5 bp fee and a fixed swap size of 2 token B.

    Short horizon and few paths: unit tests stay well under a second.
    """
    return ContextFactory()


@pytest.fixture
def busy_context():
    """Context where a swap arrives in every block."""
    return ContextFactory(arrival=ArrivalModel.always())


@pytest.fixture
def quiet_context():
    """Context where no swap ever arrives."""
    return ContextFactory(arrival=ArrivalModel.never())


@pytest.fixture
def point_density():
    return JointSwapDensity.point_mass(2.0)


# ==================== Helper Fixtures ====================

@pytest.fixture
def anyio_backend():
    """
    Configure anyio backend for httpx AsyncClient.
    """
    return "asyncio"
