"""
Unit tests specific fixtures.

Unit tests should NOT start the API, the worker or touch files outside tmp_path.
Monte-Carlo tests use the small contexts from tests.factories.
"""

import numpy as np
import pytest

from app.engine.pool import LiquidityPosition, PoolState


@pytest.fixture
def toy_position() -> LiquidityPosition:
    """Ten units on ticks 2..4 of the toy pool."""
    return LiquidityPosition(2, 5, 10.0)


@pytest.fixture
def fee_swap_pool(swap_pool):
    """Swap walk-through pool with a 30 bp fee."""
    return PoolState(swap_pool.grid, swap_pool.liquidity, swap_pool.pool_rate, fee_rate=0.003)


@pytest.fixture
def base_liquidity() -> np.ndarray:
    """100 units on each of the four ticks of the factory grid."""
    return np.full(4, 100.0)
