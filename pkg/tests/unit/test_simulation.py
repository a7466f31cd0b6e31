"""
Unit tests for the Monte-Carlo fee kernel and the single-path ledger.
"""

import numpy as np
import pytest

from app.core.errors import InvalidInputError, OutOfRangeError
from app.engine.bot import attack_profit
from app.engine.simulation import (
    SimulationCounters,
    simulate_fee_volume,
    simulate_ledger,
)
from app.engine.stochastic import ArrivalModel, MarketModel
from tests.factories import BotConfigFactory, ContextFactory


@pytest.mark.unit
class TestSimulationContext:
    """Test context validation."""

    def test_single_path_rejected(self):
        with pytest.raises(InvalidInputError):
            ContextFactory(n_paths=1)

    def test_empty_horizon_rejected(self):
        with pytest.raises(InvalidInputError):
            ContextFactory(horizon=0)

    def test_pool_rate_outside_grid(self):
        with pytest.raises(OutOfRangeError):
            ContextFactory(pool_rate=5.0)

    def test_evolve_keeps_other_fields(self, context):
        evolved = context.evolve(seed=99)
        assert evolved.seed == 99
        assert evolved.grid is context.grid
        assert context.seed == 7

    def test_pool(self, context, base_liquidity):
        state = context.pool(base_liquidity)
        assert state.pool_rate == 1.3
        assert state.fee_rate == 0.0005


@pytest.mark.unit
class TestSimulateFeeVolume:
    """Test the vectorised kernel."""

    def test_shapes(self, context, base_liquidity):
        lanes = np.vstack([base_liquidity, 2 * base_liquidity])
        volume = simulate_fee_volume(context, lanes)
        assert volume.volume.shape == (2, 16, 4)
        assert volume.pool_fees.shape == (2, 16)
        assert volume.n_paths == 16

    def test_no_arrivals_no_fees(self, quiet_context, base_liquidity):
        volume = simulate_fee_volume(quiet_context, base_liquidity)
        assert np.all(volume.volume == 0)
        assert volume.counters.swaps == 0

    def test_every_block_swaps(self, busy_context, base_liquidity):
        volume = simulate_fee_volume(busy_context, base_liquidity)
        assert volume.counters.swaps == 16 * 30
        assert volume.counters.blocks == 16 * 30

    def test_fees_conserved(self, busy_context, base_liquidity):
        """Per-unit fees times liquidity add up to what swappers paid."""
        volume = simulate_fee_volume(busy_context, base_liquidity)
        earned = np.sum(volume.volume[0] * base_liquidity, axis=-1)
        assert earned == pytest.approx(volume.pool_fees[0], rel=1e-9)

    def test_empty_ticks_earn_nothing(self, busy_context):
        lane = np.array([0.0, 100.0, 100.0, 0.0])
        volume = simulate_fee_volume(busy_context, lane)
        assert np.all(volume.volume[0, :, 0] == 0)
        assert np.all(volume.volume[0, :, 3] == 0)

    def test_thread_count_does_not_change_results(self, context, base_liquidity):
        single = simulate_fee_volume(context, base_liquidity)
        threaded = simulate_fee_volume(context.evolve(threads=2), base_liquidity)
        assert np.array_equal(single.volume, threaded.volume)

    def test_reproducible(self, context, base_liquidity):
        first = simulate_fee_volume(context, base_liquidity)
        second = simulate_fee_volume(context, base_liquidity)
        assert np.array_equal(first.volume, second.volume)

    def test_lanes_share_paths(self, context, base_liquidity):
        """A lane's result does not depend on which other lanes run with it."""
        other = np.array([10.0, 300.0, 5.0, 50.0])
        alone = simulate_fee_volume(context, other)
        together = simulate_fee_volume(context, np.vstack([base_liquidity, other]))
        assert np.array_equal(alone.volume[0], together.volume[1])

    def test_seed_changes_paths(self, context, base_liquidity):
        first = simulate_fee_volume(context, base_liquidity)
        second = simulate_fee_volume(context.evolve(seed=8), base_liquidity)
        assert not np.array_equal(first.pool_fees, second.pool_fees)

    def test_position_volume(self, context, base_liquidity):
        volume = simulate_fee_volume(context, base_liquidity)
        prefix = volume.range_sums()
        assert volume.position_volume(0, 2, 4) == pytest.approx(prefix[0, :, 3] - prefix[0, :, 1])

    def test_wrong_lane_width(self, context):
        with pytest.raises(InvalidInputError):
            simulate_fee_volume(context, np.ones(3))

    def test_bot_takes_share(self, base_liquidity):
        context = ContextFactory(arrival=ArrivalModel.always(), bot=BotConfigFactory())
        volume = simulate_fee_volume(context, base_liquidity)
        assert volume.counters.attacks > 0
        assert 0 < volume.bot_fees.sum() < volume.pool_fees.sum()


@pytest.mark.unit
class TestSimulationCounters:
    def test_merge(self):
        merged = SimulationCounters(blocks=2, swaps=1).merge(SimulationCounters(blocks=3, attacks=4))
        assert merged.as_dict() == {
            "blocks": 5, "swaps": 1, "partial_fills": 0,
            "arbitrage_clamps": 0, "attacks": 4, "containment_violations": 0,
        }

    def test_warnings_logged(self, caplog):
        SimulationCounters(partial_fills=3).log_summary("run")
        assert "3 swaps exceeded pool capacity" in caplog.text


@pytest.mark.unit
class TestSimulateLedger:
    """Test the block-by-block ledger."""

    def test_one_row_per_block(self, context, base_liquidity):
        rows = simulate_ledger(context, base_liquidity, np.random.default_rng(0), start_block=100)
        assert len(rows) == 30
        assert [r.block for r in rows] == list(range(100, 130))

    def test_given_market_rates(self, context, base_liquidity):
        rates = np.linspace(1.3, 1.4, 30)
        rows = simulate_ledger(context, base_liquidity, np.random.default_rng(0), market_rates=rates)
        assert [r.market_rate for r in rows] == pytest.approx(rates)

    def test_fees_without_bot(self, base_liquidity):
        context = ContextFactory(arrival=ArrivalModel.always(), horizon=5)
        rows = simulate_ledger(context, base_liquidity, np.random.default_rng(1))
        assert all(r.swap in (-2.0, 2.0) for r in rows)
        assert all(r.lp_fees_total == pytest.approx(0.0005 * 2.0) for r in rows)
        assert not any(r.attacked or r.engaged for r in rows)

    def test_quiet_pool_keeps_rate(self, quiet_context, base_liquidity):
        rows = simulate_ledger(quiet_context, base_liquidity, np.random.default_rng(1))
        assert all(r.swap == 0.0 and r.pool_rate == 1.3 for r in rows)

    def test_first_attack_booked(self, base_liquidity):
        """At p* = m* the first swap is attacked and the bot books its closed-form profit."""
        bot = BotConfigFactory()
        context = ContextFactory(arrival=ArrivalModel.always(), bot=bot, market=MarketModel(volatility=0.0))
        rows = simulate_ledger(context, base_liquidity, np.random.default_rng(2))
        first = rows[0]
        assert first.attacked and first.engaged
        assert first.bot_profit == pytest.approx(attack_profit(first.swap, context.pool(base_liquidity), 1.3, bot))
        assert first.lp_fees_total == pytest.approx(0.0005 * 2.0 * 100.0 / 150.0)
        assert all(r.bot_profit == 0.0 for r in rows if not r.attacked)
