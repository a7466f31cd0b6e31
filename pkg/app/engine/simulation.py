"""
Monte-Carlo kernel shared by every value estimate.

A run simulates a set of candidate pools ("lanes", one liquidity vector
each) over many swap paths with common random numbers: every lane sees the
same market path and the same uniforms for arrival, size and bot
engagement, only the pool's reaction differs. For each lane, path and tick
it returns the fees earned per unit of liquidity, so the profit of any
position is u * sum of the volume over its ticks.

Random numbers come from one stream per (seed, belief, path block); results
are concatenated in block order and so do not depend on the thread count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from app.core.errors import InvalidInputError
from app.engine.bot import BotConfig, attack_thresholds
from app.engine.pool import (
    PoolState,
    PriceGrid,
    active_tick,
    clipped_sqrt,
    cumulative_token_b,
    cumulative_token_b_grid,
    execute_swap,
    solve_sqrt_rate,
    tokens_from_liquidity,
)
from app.engine.stochastic import ArrivalModel, JointSwapDensity, MarketModel
from app.helpers import streams
from app.helpers.getters import getDefaultPaths, getDefaultSeed, getDefaultThreads, getPathBlock

logger = logging.getLogger(__name__)


# ==================== Context ====================

@dataclass(frozen=True, eq=False)
class SimulationContext:
    """Everything exogenous to an LP's decision for one horizon."""

    grid: PriceGrid
    pool_rate: float
    market_rate: float
    fee_rate: float
    density: JointSwapDensity
    arrival: ArrivalModel = field(default_factory=ArrivalModel)
    market: MarketModel = field(default_factory=MarketModel)
    horizon: int = 7200
    n_paths: int = field(default_factory=getDefaultPaths)
    seed: int = field(default_factory=getDefaultSeed)
    path_block: int = field(default_factory=getPathBlock)
    threads: int = field(default_factory=getDefaultThreads)
    bot: Optional[BotConfig] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidInputError("horizon must be at least one block")
        if self.n_paths < 2:
            raise InvalidInputError("need at least two paths for a variance")
        if self.path_block < 1 or self.threads < 1:
            raise InvalidInputError("path block and thread count must be positive")
        if self.market_rate <= 0:
            raise InvalidInputError("market rate must be positive")
        # validates rate against the grid
        active_tick(self.grid, self.pool_rate)

    @property
    def d(self) -> int:
        return self.grid.d

    def pool(self, liquidity: np.ndarray) -> PoolState:
        return PoolState(self.grid, liquidity, self.pool_rate, self.fee_rate)

    def evolve(self, **changes) -> "SimulationContext":
        return replace(self, **changes)


@dataclass
class SimulationCounters:
    """Events aggregated over a run and logged once."""

    blocks: int = 0
    swaps: int = 0
    partial_fills: int = 0
    arbitrage_clamps: int = 0
    attacks: int = 0
    containment_violations: int = 0

    def merge(self, other: "SimulationCounters") -> "SimulationCounters":
        return SimulationCounters(
            **{name: getattr(self, name) + getattr(other, name) for name in self.__dataclass_fields__}
        )

    def as_dict(self) -> Dict[str, int]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    def log_summary(self, label: str):
        logger.info(f"{label}: {self.swaps} swaps over {self.blocks} lane-path-blocks, {self.attacks} attacks")
        if self.partial_fills:
            logger.warning(f"{label}: {self.partial_fills} swaps exceeded pool capacity and were clamped")
        if self.arbitrage_clamps:
            logger.warning(f"{label}: {self.arbitrage_clamps} arbitrage levels clamped to the swap density grid")
        if self.containment_violations:
            logger.warning(f"{label}: {self.containment_violations} attacked swaps left the active tick")


@dataclass(eq=False)
class FeeVolume:
    """
    Kernel output for A lanes and P paths.

    volume: (A, P, d) fees per unit of liquidity
    pool_fees: (A, P) fees paid by swappers to the whole pool
    bot_profit, bot_fees: (A, P) bot ledger totals
    """

    volume: np.ndarray
    pool_fees: np.ndarray
    bot_profit: np.ndarray
    bot_fees: np.ndarray
    counters: SimulationCounters

    @property
    def n_paths(self) -> int:
        return self.volume.shape[1]

    def range_sums(self) -> np.ndarray:
        """Prefix sums over ticks, shape (A, P, d+1); range [j1, j2) is W[j2-1] - W[j1-1]."""
        zeros = np.zeros(self.volume.shape[:-1] + (1,))
        return np.concatenate([zeros, np.cumsum(self.volume, axis=-1)], axis=-1)

    def position_volume(self, lane: int, lower: int, upper: int) -> np.ndarray:
        """Per-unit fees of ticks [lower, upper) on one lane, shape (P,)."""
        return np.sum(self.volume[lane, :, lower - 1:upper - 1], axis=-1)

    @staticmethod
    def concatenate(parts: List["FeeVolume"]) -> "FeeVolume":
        counters = SimulationCounters()
        for part in parts:
            counters = counters.merge(part.counters)
        return FeeVolume(
            volume=np.concatenate([p.volume for p in parts], axis=1),
            pool_fees=np.concatenate([p.pool_fees for p in parts], axis=1),
            bot_profit=np.concatenate([p.bot_profit for p in parts], axis=1),
            bot_fees=np.concatenate([p.bot_fees for p in parts], axis=1),
            counters=counters,
        )


# ==================== Kernel ====================

def simulate_fee_volume(context: SimulationContext, lanes: np.ndarray, belief: int = 0) -> FeeVolume:
    """
    Run every lane over ``context.n_paths`` paths under trend belief ``belief``.

    ``lanes`` is an (A, d) array of pool liquidity vectors. The draws depend
    only on (seed, belief, block) so repeated calls with other lanes reuse
    the same swap paths.
    """
    lanes = np.atleast_2d(np.asarray(lanes, dtype=float))
    if lanes.shape[1] != context.d:
        raise InvalidInputError(f"lanes have {lanes.shape[1]} ticks, grid has {context.d}")
    if np.any(lanes < 0):
        raise InvalidInputError("lane liquidity must be non-negative")

    blocks = streams.path_blocks(context.n_paths, context.path_block)
    jobs = [(index, start, stop) for index, (start, stop) in enumerate(blocks)]

    def run(job):
        index, start, stop = job
        rng = streams.stream(context.seed, streams.PATHS, streams.belief_key(belief), index)
        return simulate_block(context, lanes, belief, stop - start, rng)

    if context.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=context.threads) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    return FeeVolume.concatenate(parts)


def simulate_block(
    context: SimulationContext,
    lanes: np.ndarray,
    belief: int,
    n_paths: int,
    rng: np.random.Generator,
) -> FeeVolume:
    """
    One block of paths for all lanes.

    Per step the stream yields n_paths normals (market) and a (3, n_paths)
    array of uniforms (arrival, size, bot engagement), whatever happens in
    the pool.
    """
    grid = context.grid
    sp = grid.sqrt_points
    d = grid.d
    n_lanes = lanes.shape[0]
    gamma = context.fee_rate
    market = context.market.with_belief(belief)
    bot = context.bot

    pools = lanes[:, None, :]
    cum = cumulative_token_b_grid(sp, lanes)[:, None, :]
    lane_index = np.arange(n_lanes)[:, None]

    s = np.full((n_lanes, n_paths), np.sqrt(context.pool_rate))
    m = np.full(n_paths, float(context.market_rate))
    volume = np.zeros((n_lanes, n_paths, d))
    pool_fees = np.zeros((n_lanes, n_paths))
    bot_profit = np.zeros((n_lanes, n_paths))
    bot_fees = np.zeros((n_lanes, n_paths))
    counters = SimulationCounters(blocks=n_lanes * n_paths * context.horizon)

    for _ in range(context.horizon):
        normals = rng.standard_normal(n_paths)
        uniforms = rng.random((3, n_paths))
        m = market.advance(m, normals)

        arbitrage = s * s - m
        arrived = uniforms[0] < context.arrival.probability(arbitrage)
        if not np.any(arrived):
            continue
        sizes, clamped = context.density.quantile(arbitrage, np.broadcast_to(uniforms[1], arbitrage.shape))
        counters.arbitrage_clamps += clamped
        x = np.where(arrived, sizes, 0.0)
        counters.swaps += int(np.count_nonzero(x))

        effective, effective_cum = pools, cum
        attacked = None
        if bot is not None and bot.engagement > 0:
            tick = np.clip(np.searchsorted(sp, s, side="left"), 1, d) - 1
            lower, upper = attack_thresholds(
                lanes[lane_index, tick], s, m, bot.liquidity, bot.gas, gamma
            )
            attacked = (x != 0) & (uniforms[2] < bot.engagement) & ((x < lower) | (x > upper))
            if np.any(attacked):
                counters.attacks += int(np.count_nonzero(attacked))
                extra = np.zeros((n_lanes, n_paths, d))
                np.put_along_axis(extra, tick[..., None], np.where(attacked, bot.liquidity, 0.0)[..., None], axis=-1)
                effective = pools + extra
                effective_cum = cumulative_token_b_grid(sp, effective)
            else:
                attacked = None

        start = cumulative_token_b(sp, effective, s)
        capacity = effective_cum[..., -1]
        target = start + x
        over = (target > capacity) | (target < 0)
        counters.partial_fills += int(np.count_nonzero(over & (x != 0)))
        target = np.clip(target, 0.0, capacity)
        executed = target - start

        solved = solve_sqrt_rate(sp, effective, effective_cum, target, x > 0)
        s_new = np.where(executed != 0, np.clip(solved, sp[0], sp[-1]), s)

        before = clipped_sqrt(sp, s)
        after = clipped_sqrt(sp, s_new)
        volume += gamma * np.abs(after - before) * (effective > 0)
        pool_fees += gamma * np.abs(executed)

        if attacked is not None:
            lo, hi = sp[tick], sp[tick + 1]
            c_after = np.clip(s_new, lo, hi)
            moved = c_after - s
            fees = bot.liquidity * gamma * np.abs(moved)
            gain = bot.liquidity * (moved + m * (1.0 / c_after - 1.0 / s)) + fees - bot.gas
            bot_profit += np.where(attacked, gain, 0.0)
            bot_fees += np.where(attacked, fees, 0.0)
            counters.containment_violations += int(np.count_nonzero(attacked & ((s_new < lo) | (s_new > hi))))

        s = s_new

    return FeeVolume(volume, pool_fees, bot_profit, bot_fees, counters)


# ==================== Single-path ledger ====================

@dataclass(frozen=True)
class LedgerRow:
    block: int
    swap: float
    engaged: bool
    attacked: bool
    bot_profit: float
    lp_fees_total: float
    pool_rate: float
    market_rate: float


def simulate_ledger(
    context: SimulationContext,
    liquidity: np.ndarray,
    rng: np.random.Generator,
    market_rates: Optional[np.ndarray] = None,
    belief: int = 0,
    start_block: int = 0,
) -> List[LedgerRow]:
    """
    Block-by-block run of one path on the pool ``liquidity`` with full bookkeeping.

    Uses the scalar pool operations. When ``market_rates`` is given (one
    rate per block) it replaces the GBM path. The liquidity vector is the
    same before every block; the bot's liquidity is added and removed within
    the block.
    """
    state = context.pool(liquidity)
    market = context.market.with_belief(belief)
    bot = context.bot
    m = float(context.market_rate)
    rows: List[LedgerRow] = []
    clamps = 0

    for t in range(context.horizon):
        normal = rng.standard_normal()
        uniforms = rng.random(3)
        m = float(market_rates[t]) if market_rates is not None else float(market.advance(m, normal))
        arbitrage = state.pool_rate - m
        xi = 0.0
        if uniforms[0] < context.arrival.probability(arbitrage):
            sizes, clamped = context.density.quantile(np.array(arbitrage), np.array(uniforms[1]))
            clamps += clamped
            xi = float(sizes)

        engaged = bot is not None and uniforms[2] < bot.engagement
        attacked = False
        profit = 0.0
        pool = state
        if engaged and xi != 0.0:
            tick = state.active_tick
            lower, upper = attack_thresholds(
                state.liquidity[tick - 1], state.sqrt_rate, m, bot.liquidity, bot.gas, state.fee_rate
            )
            attacked = bool(xi < lower or xi > upper)
            if attacked:
                extra = np.zeros(state.d)
                extra[tick - 1] = bot.liquidity
                pool = state.with_liquidity(state.liquidity + extra)

        if xi != 0.0:
            outcome = execute_swap(pool, xi, allow_partial=True)
            fees = outcome.fees_per_tick
            if attacked:
                tick = state.active_tick
                a_before, b_before = tokens_from_liquidity(bot.liquidity, tick, state.grid, state.pool_rate)
                a_after, b_after = tokens_from_liquidity(bot.liquidity, tick, state.grid, outcome.new_pool_rate)
                share = bot.liquidity / pool.liquidity[tick - 1]
                bot_fee = fees[tick - 1] * share
                profit = (b_after - b_before) + m * (a_after - a_before) + bot_fee - bot.gas
                lp_fees = float(np.sum(fees)) - bot_fee
            else:
                lp_fees = float(np.sum(fees))
            state = state.with_rate(outcome.new_pool_rate)
        else:
            lp_fees = 0.0

        rows.append(LedgerRow(
            block=start_block + t,
            swap=xi,
            engaged=bool(engaged),
            attacked=attacked,
            bot_profit=float(profit),
            lp_fees_total=lp_fees,
            pool_rate=state.pool_rate,
            market_rate=m,
        ))

    if clamps:
        logger.warning(f"{clamps} arbitrage levels clamped to the swap density grid")
    return rows
