"""
Data factories for test data generation.

Factories use factory-boy to build engine objects and records with sensible
defaults small enough for fast Monte-Carlo runs.

Usage:
    from tests.factories import PoolStateFactory, ContextFactory

    state = PoolStateFactory(fee_rate=0.0)
    context = ContextFactory(horizon=5)
"""

from tests.factories.pool import LiquidityPositionFactory, PoolStateFactory, PriceGridFactory, random_pool
from tests.factories.engine import BotConfigFactory, ContextFactory, LpTypeFactory, two_point_density
from tests.factories.transaction import TransactionRecordFactory
from tests.factories.scenario import SMALL_POOL, SMALL_SCENARIO, scenario_payload

__all__ = [
    "PriceGridFactory",
    "PoolStateFactory",
    "LiquidityPositionFactory",
    "random_pool",
    "LpTypeFactory",
    "BotConfigFactory",
    "ContextFactory",
    "TransactionRecordFactory",
    "two_point_density",
    "SMALL_POOL",
    "SMALL_SCENARIO",
    "scenario_payload",
]
