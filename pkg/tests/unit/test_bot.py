"""
Unit tests for the just-in-time liquidity bot.
"""

import numpy as np
import pytest

from app.core.errors import InvalidInputError
from app.engine.bot import (
    BotConfig,
    BotStrategy,
    attack_profit,
    attack_thresholds,
    attacked_pool,
    bot_fee_share,
    bot_liquidity_from_capital,
    bot_thresholds,
    bot_value,
    stackelberg_reward,
)
from app.engine.pool import LiquidityPosition, liquidity_per_tick, swap_boundaries
from app.helpers import streams
from tests.factories import random_pool

BOT_L = 1000.0
GAS = 0.01


@pytest.mark.unit
class TestBotConfig:
    def test_defaults(self):
        bot = BotConfig(liquidity=10.0)
        assert bot.gas == 20.0
        assert bot.engagement == pytest.approx(0.5278)

    @pytest.mark.parametrize("kwargs", [
        {"liquidity": 0.0},
        {"liquidity": 1.0, "gas": -1.0},
        {"liquidity": 1.0, "engagement": 1.5},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidInputError):
            BotConfig(**kwargs)


@pytest.mark.unit
class TestBotStrategy:
    def test_attacks_outside_band(self):
        strategy = BotStrategy(-1.0, 2.0)
        assert list(strategy.attacks([-2.0, -1.0, 0.0, 2.0, 3.0])) == [True, False, False, False, True]
        assert strategy.attacks(5.0) is True

    def test_band_must_contain_zero(self):
        with pytest.raises(InvalidInputError):
            BotStrategy(0.5, 2.0)


@pytest.mark.unit
class TestThresholds:
    """Thresholds are the roots of the bot's value inside the active tick."""

    def test_band_contains_zero(self, fee_swap_pool):
        strategy = bot_thresholds(fee_swap_pool, 1.6, BotConfig(BOT_L, GAS, 1.0))
        assert strategy.lower < 0 < strategy.upper

    def test_value_vanishes_at_thresholds(self, fee_swap_pool):
        strategy = bot_thresholds(fee_swap_pool, 1.6, BotConfig(BOT_L, GAS, 1.0))
        for xi in (strategy.lower, strategy.upper):
            assert bot_value(1, xi, BOT_L, fee_swap_pool, 1.6, GAS) == pytest.approx(0.0, abs=1e-9)

    def test_value_sign_around_thresholds(self, fee_swap_pool):
        strategy = bot_thresholds(fee_swap_pool, 1.6, BotConfig(BOT_L, GAS, 1.0))
        for xi in (strategy.lower, strategy.upper):
            assert bot_value(1, 1.5 * xi, BOT_L, fee_swap_pool, 1.6, GAS) > 0
            assert bot_value(1, 0.5 * xi, BOT_L, fee_swap_pool, 1.6, GAS) < 0

    def test_free_gas_at_fair_price(self, fee_swap_pool):
        """Without gas and with p* = m*, every swap is worth attacking."""
        strategy = bot_thresholds(fee_swap_pool, 1.6, BotConfig(BOT_L, 0.0, 1.0))
        assert strategy.lower == pytest.approx(0.0, abs=1e-9)
        assert strategy.upper == pytest.approx(0.0, abs=1e-9)

    def test_gas_widens_band(self, fee_swap_pool):
        cheap = bot_thresholds(fee_swap_pool, 1.6, BotConfig(BOT_L, 0.01, 1.0))
        costly = bot_thresholds(fee_swap_pool, 1.6, BotConfig(BOT_L, 1.0, 1.0))
        assert costly.lower < cheap.lower
        assert costly.upper > cheap.upper

    def test_vectorised_matches_scalar(self, fee_swap_pool):
        bot = BotConfig(BOT_L, GAS, 1.0)
        strategy = bot_thresholds(fee_swap_pool, 1.6, bot)
        lower, upper = attack_thresholds(
            np.array([100.956, 100.956]), fee_swap_pool.sqrt_rate, 1.6, BOT_L, GAS, 0.003
        )
        assert lower == pytest.approx([strategy.lower] * 2)
        assert upper == pytest.approx([strategy.upper] * 2)

    def test_market_rate_must_be_positive(self, fee_swap_pool):
        with pytest.raises(InvalidInputError):
            bot_thresholds(fee_swap_pool, 0.0, BotConfig(BOT_L))


@pytest.mark.unit
class TestThresholdOracle:
    """The threshold rule agrees with the sign of the bot's value on random instances."""

    def test_sign_of_value_matches_rule(self):
        checked = 0
        for n in range(50):
            rng = streams.stream(99, streams.SCENARIO, n)
            state = random_pool(rng, max_ticks=12, fee_rate=float(rng.uniform(1e-4, 0.01)))
            bot = BotConfig(float(rng.uniform(10.0, 2000.0)), float(rng.uniform(1e-3, 0.5)), 1.0)
            market_rate = state.pool_rate * float(rng.uniform(0.98, 1.02))
            strategy = bot_thresholds(state, market_rate, bot)

            tick = state.active_tick
            beta = swap_boundaries(attacked_pool(state, bot.liquidity))
            for xi in np.linspace(0.999 * beta[tick - 1], 0.999 * beta[tick], 200):
                if min(abs(xi - strategy.lower), abs(xi - strategy.upper)) < 1e-6:
                    continue
                value = bot_value(1, xi, bot.liquidity, state, market_rate, bot.gas)
                assert (value > 0) == strategy.attacks(xi), f"instance {n}, xi={xi}"
                checked += 1
        assert checked > 9000


@pytest.mark.unit
class TestBotValue:
    def test_no_attack_is_worth_nothing(self, fee_swap_pool):
        assert bot_value(0, 3.0, BOT_L, fee_swap_pool, 1.6, GAS) == 0.0

    def test_attacked_pool_adds_to_active_tick(self, fee_swap_pool):
        pool = attacked_pool(fee_swap_pool, BOT_L)
        assert pool.liquidity[2] == pytest.approx(100.956 + BOT_L)
        assert pool.liquidity[3] == fee_swap_pool.liquidity[3]

    @pytest.mark.parametrize("xi", [-2.0, 1.5])
    def test_realized_profit_matches_value(self, fee_swap_pool, xi):
        """Inside the active tick the balance-sheet profit equals the closed form."""
        bot = BotConfig(BOT_L, GAS, 1.0)
        assert attack_profit(xi, fee_swap_pool, 1.6, bot) == pytest.approx(
            bot_value(1, xi, BOT_L, fee_swap_pool, 1.6, GAS), rel=1e-9
        )

    def test_leaving_tick_logs_warning(self, fee_swap_pool, caplog):
        bot_value(1, -15.0, 10.0, fee_swap_pool, 1.6, GAS)
        assert "leaves active tick" in caplog.text

    def test_fee_share(self, fee_swap_pool):
        assert bot_fee_share(fee_swap_pool, BotConfig(BOT_L)) == pytest.approx(BOT_L / (BOT_L + 100.956))


@pytest.mark.unit
class TestStackelbergReward:
    """LP fees for a swap the bot may or may not attack."""

    def test_attacked_swap_shares_with_bot(self, fee_swap_pool):
        position = LiquidityPosition(3, 4, 10.0)
        reward = stackelberg_reward(2.0, 1, position, fee_swap_pool, BOT_L, include_position=True)
        assert reward == pytest.approx(0.003 * 2.0 * 10.0 / (110.956 + BOT_L))

    def test_unattacked_swap_is_plain_fee(self, fee_swap_pool):
        position = LiquidityPosition(3, 4, 10.0)
        reward = stackelberg_reward(2.0, 0, position, fee_swap_pool, BOT_L, include_position=True)
        assert reward == pytest.approx(0.003 * 2.0 * 10.0 / 110.956)

    def test_attack_hurts_lp(self, fee_swap_pool):
        position = LiquidityPosition(2, 5, 10.0)
        attacked = stackelberg_reward(-2.0, 1, position, fee_swap_pool, BOT_L, include_position=True)
        plain = stackelberg_reward(-2.0, 0, position, fee_swap_pool, BOT_L, include_position=True)
        assert attacked < plain

    def test_attacked_position_off_active_tick(self, fee_swap_pool):
        position = LiquidityPosition(5, 7, 10.0)
        assert stackelberg_reward(2.0, 1, position, fee_swap_pool, BOT_L, include_position=True) == 0.0


@pytest.mark.unit
class TestBotLiquidityFromCapital:
    def test_matches_single_tick_position(self, fee_swap_pool):
        units = bot_liquidity_from_capital(100.0, fee_swap_pool, 1.6)
        assert units == pytest.approx(liquidity_per_tick(3, 4, 100.0, 1.6, fee_swap_pool.grid, 1.6))
        assert units > 0
