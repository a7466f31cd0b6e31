"""
LPs as Stackelberg leaders, the JIT bot as follower.

The bot's strategy is a deterministic function of the pool, so LPs who
anticipate it simply value their positions with the bot active in the
simulation. Naive LPs solve the bot-free game and are attacked anyway.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import InvalidInputError
from app.engine.bot import BotConfig
from app.engine.games import MfgEquilibrium, TypeDistribution, fictitious_play_mfg
from app.engine.metrics import wasserstein1
from app.engine.optimizer import LpType, ValueEstimate, optimize_single
from app.engine.pool import LiquidityPosition
from app.engine.simulation import LedgerRow, SimulationContext, simulate_fee_volume, simulate_ledger

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BotLedger:
    rows: List[LedgerRow]
    bot_profit: float
    lp_fees: float
    attacks: int
    engaged: int

    @classmethod
    def from_rows(cls, rows: List[LedgerRow]) -> "BotLedger":
        return cls(
            rows=rows,
            bot_profit=float(sum(r.bot_profit for r in rows)),
            lp_fees=float(sum(r.lp_fees_total for r in rows)),
            attacks=sum(1 for r in rows if r.attacked),
            engaged=sum(1 for r in rows if r.engaged),
        )


@dataclass(frozen=True)
class BotComparison:
    """Bot outcome against naive and anticipating LPs at one bot liquidity."""

    bot_liquidity: float
    naive_bot_profit: float
    anticipating_bot_profit: float
    naive_fee_share: float
    anticipating_fee_share: float
    liquidity_distance: float


def simulate_with_bot(
    liquidity: np.ndarray,
    bot: Optional[BotConfig],
    context: SimulationContext,
    rng: np.random.Generator,
    market_rates: Optional[np.ndarray] = None,
) -> BotLedger:
    """
    Block-by-block ledger with the bot attacking ``liquidity``.

    The pool returns to ``liquidity`` after every attack. ``bot=None`` gives
    the plain ledger.
    """
    rows = simulate_ledger(context.evolve(bot=bot), liquidity, rng, market_rates=market_rates)
    ledger = BotLedger.from_rows(rows)
    logger.info(
        f"Ledger over {len(rows)} blocks: {ledger.attacks} attacks, "
        f"bot profit {ledger.bot_profit:.6g}, LP fees {ledger.lp_fees:.6g}"
    )
    return ledger


def lp_optimize_with_bot(
    lp: LpType,
    reference: np.ndarray,
    bot: BotConfig,
    context: SimulationContext,
    n_paths: Optional[int] = None,
) -> Tuple[LiquidityPosition, ValueEstimate]:
    """Best position of an LP who anticipates the bot's response to the pool."""
    return optimize_single(lp, reference, context.evolve(bot=bot), n_paths=n_paths)


def stackelberg_mfg(
    initial: np.ndarray,
    distribution: TypeDistribution,
    bot: BotConfig,
    context: SimulationContext,
    **kwargs,
) -> MfgEquilibrium:
    """Mean-field equilibrium of LPs anticipating ``bot``."""
    return fictitious_play_mfg(initial, distribution, context.evolve(bot=bot), **kwargs)


def bot_outcome(liquidity: np.ndarray, bot: BotConfig, context: SimulationContext) -> Tuple[float, float]:
    """Mean bot profit per path and the bot's share of all swap fees."""
    volume = simulate_fee_volume(context.evolve(bot=bot), np.asarray(liquidity, dtype=float)[None, :])
    volume.counters.log_summary(f"bot L={bot.liquidity:g}")
    pool_fees = float(volume.pool_fees.sum())
    share = float(volume.bot_fees.sum() / pool_fees) if pool_fees > 0 else 0.0
    return float(volume.bot_profit.mean()), share


def compare_naive_anticipating(
    initial: np.ndarray,
    distribution: TypeDistribution,
    bot_levels: Sequence[float],
    context: SimulationContext,
    gas: float = 20.0,
    engagement: float = 0.5278,
    **kwargs,
) -> List[BotComparison]:
    """
    Bot profit and fee share against naive and anticipating equilibria.

    The naive equilibrium ignores the bot; one anticipating equilibrium is
    solved per bot liquidity level.
    """
    if not bot_levels:
        raise InvalidInputError("need at least one bot liquidity level")
    naive = fictitious_play_mfg(initial, distribution, context.evolve(bot=None), **kwargs).liquidity
    rows = []
    for level in bot_levels:
        bot = BotConfig(liquidity=float(level), gas=gas, engagement=engagement)
        anticipating = stackelberg_mfg(initial, distribution, bot, context, **kwargs).liquidity
        naive_profit, naive_share = bot_outcome(naive, bot, context)
        anticipating_profit, anticipating_share = bot_outcome(anticipating, bot, context)
        rows.append(BotComparison(
            bot_liquidity=float(level),
            naive_bot_profit=naive_profit,
            anticipating_bot_profit=anticipating_profit,
            naive_fee_share=naive_share,
            anticipating_fee_share=anticipating_share,
            liquidity_distance=wasserstein1(naive, anticipating),
        ))
        logger.info(
            f"L={level:g}: bot profit naive={naive_profit:.6g} anticipating={anticipating_profit:.6g}"
        )
    return rows
