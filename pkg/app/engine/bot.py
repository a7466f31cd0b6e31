"""
Just-in-time liquidity bot.

Before a swap lands, the bot may add L units to the active tick and remove
them (plus its share of fees) right after. Its value for one block is

    V_B = (x L / l1) (xi - m* psi(xi) + gamma |xi|) - x G,    l1 = l*_{i*} + L

and, as long as the swap stays inside the active tick, V_B > 0 reduces to
the quadratic C xi^2 + D xi + E > 0 with

    C = 1 + gamma sgn(xi),  D = C Y - m* X - G l1 / L,  E = -G l1 Y / L

where X = l1 / sqrt(p*) and Y = l1 sqrt(p*) are the active tick's virtual
reserves. The two branches give the attack thresholds.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from app.core.errors import InvalidInputError
from app.engine.pool import (
    LiquidityPosition,
    PoolState,
    execute_swap,
    liquidity_per_tick,
    unit_fee_volume,
)

logger = logging.getLogger(__name__)

DEFAULT_GAS = 20.0
DEFAULT_ENGAGEMENT = 0.5278


@dataclass(frozen=True)
class BotConfig:
    """Bot liquidity L (units), gas G (token B) and engagement rate zeta."""

    liquidity: float
    gas: float = DEFAULT_GAS
    engagement: float = DEFAULT_ENGAGEMENT

    def __post_init__(self):
        if not self.liquidity > 0:
            raise InvalidInputError("bot liquidity must be positive")
        if self.gas < 0:
            raise InvalidInputError("gas must be non-negative")
        if not 0.0 <= self.engagement <= 1.0:
            raise InvalidInputError(f"engagement {self.engagement!r} outside [0, 1]")


@dataclass(frozen=True)
class BotStrategy:
    """Attack iff the swap falls outside [lower, upper]."""

    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > 0 or self.upper < 0:
            raise InvalidInputError("thresholds must satisfy lower <= 0 <= upper")

    def attacks(self, xi):
        xi = np.asarray(xi, dtype=float)
        decision = (xi < self.lower) | (xi > self.upper)
        return bool(decision) if decision.ndim == 0 else decision


def attack_thresholds(ell_active, sqrt_rate, market_rate, bot_liquidity, gas, fee_rate) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorised (lower, upper) thresholds.

    ``ell_active`` is the non-bot liquidity of the active tick; every
    argument broadcasts.
    """
    ell = np.asarray(ell_active, dtype=float) + bot_liquidity
    s = np.asarray(sqrt_rate, dtype=float)
    y_virtual = ell * s
    x_virtual = ell / s
    gas_term = gas * ell / bot_liquidity
    e = -gas_term * y_virtual

    c_up = 1.0 + fee_rate
    d_up = c_up * y_virtual - market_rate * x_virtual - gas_term
    upper = (-d_up + np.sqrt(np.maximum(d_up * d_up - 4.0 * c_up * e, 0.0))) / (2.0 * c_up)

    c_down = 1.0 - fee_rate
    d_down = c_down * y_virtual - market_rate * x_virtual - gas_term
    lower = (-d_down - np.sqrt(np.maximum(d_down * d_down - 4.0 * c_down * e, 0.0))) / (2.0 * c_down)

    return np.minimum(lower, 0.0), np.maximum(upper, 0.0)


def bot_thresholds(state: PoolState, market_rate: float, bot: BotConfig) -> BotStrategy:
    """Attack thresholds against pool ``state`` (l*, p*, gamma)."""
    if market_rate <= 0:
        raise InvalidInputError("market rate must be positive")
    ell_active = state.liquidity[state.active_tick - 1]
    lower, upper = attack_thresholds(
        ell_active, state.sqrt_rate, market_rate, bot.liquidity, bot.gas, state.fee_rate
    )
    return BotStrategy(lower=float(lower), upper=float(upper))


def attacked_pool(state: PoolState, bot_liquidity: float) -> PoolState:
    """Pool with the bot's liquidity parked on the active tick."""
    liquidity = state.liquidity.copy()
    liquidity[state.active_tick - 1] += bot_liquidity
    return state.with_liquidity(liquidity)


def bot_value(attack: int, xi: float, bot_liquidity: float, state: PoolState, market_rate: float, gas: float) -> float:
    """
    Bot's value for one block in token B.

    Logs a warning when the swap leaves the active tick; the formula then
    no longer describes the bot's actual position.
    """
    if not attack:
        return 0.0
    if not bot_liquidity > 0:
        raise InvalidInputError("bot liquidity must be positive")
    pool = attacked_pool(state, bot_liquidity)
    tick = state.active_tick
    outcome = execute_swap(pool, xi)
    if outcome.new_pool_rate < state.grid.points[tick - 1] or outcome.new_pool_rate > state.grid.points[tick]:
        logger.warning(f"Swap of {xi} leaves active tick {tick}; single-tick bot value is approximate")
    ell = pool.liquidity[tick - 1]
    value = (bot_liquidity / ell) * (xi - market_rate * outcome.token_a_delta + state.fee_rate * abs(xi))
    return float(value - gas)


def attack_profit(xi: float, state: PoolState, market_rate: float, bot: BotConfig) -> float:
    """
    Realized profit of one attack from the bot's own token balances.

    Token A is valued at ``market_rate``; fees are the bot's pro-rata share
    of the active tick's fees.
    """
    pool = attacked_pool(state, bot.liquidity)
    tick = state.active_tick
    lo, hi = state.grid.sqrt_points[tick - 1], state.grid.sqrt_points[tick]
    outcome = execute_swap(pool, xi)
    before = float(np.clip(state.sqrt_rate, lo, hi))
    after = float(np.clip(np.sqrt(outcome.new_pool_rate), lo, hi))
    token_b = bot.liquidity * (after - before)
    token_a = bot.liquidity * (1.0 / after - 1.0 / before)
    fees = state.fee_rate * abs(token_b)
    return float(token_b + market_rate * token_a + fees - bot.gas)


def stackelberg_reward(
    xi: float,
    attack: int,
    position: LiquidityPosition,
    state: PoolState,
    bot_liquidity: float,
    include_position: bool = False,
) -> float:
    """
    LP fees for one swap when the bot may attack.

    ``state`` is the reference pool l*, which already contains the LP's
    liquidity unless ``include_position`` says otherwise. An attacked swap is
    confined to the active tick and split pro rata with the bot.
    """
    if include_position:
        state = state.with_liquidity(state.liquidity + position.expand(state.d))
    if attack:
        tick = state.active_tick
        if not position.covers(tick):
            return 0.0
        total = state.liquidity[tick - 1] + bot_liquidity
        if total <= 0:
            return 0.0
        return float(state.fee_rate * abs(xi) * position.units_per_tick / total)
    outcome = execute_swap(state, xi)
    per_unit = unit_fee_volume(state, outcome)
    return float(position.units_per_tick * np.sum(per_unit[position.lower - 1:position.upper - 1]))


def bot_liquidity_from_capital(capital: float, state: PoolState, market_rate: float) -> float:
    """Liquidity units a bot with ``capital`` token B can place on the active tick."""
    tick = state.active_tick
    return liquidity_per_tick(tick, tick + 1, capital, market_rate, state.grid, state.pool_rate)


def bot_fee_share(state: PoolState, bot: BotConfig) -> float:
    """Bot's share L / (l*_{i*} + L) of the fees of a contained attacked swap."""
    ell = state.liquidity[state.active_tick - 1]
    return float(bot.liquidity / (ell + bot.liquidity))
