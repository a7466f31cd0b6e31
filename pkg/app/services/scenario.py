"""
Multi-period predictive simulation.

The horizon is split into H periods. At the start of each period the LPs
solve the configured game against the liquidity of the previous period at
the current pool and market rates; the resulting liquidity is frozen for the
period while swaps (and bot attacks) play out block by block.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from app.core.errors import InvalidInputError, NonConvergenceError, UndefinedMetricError
from app.engine.games import (
    TypeDistribution,
    fictitious_play_mfg,
    fictitious_play_nplayer,
    profile_liquidity,
)
from app.engine.metrics import mape, mass_ratio, r_score, wasserstein1
from app.engine.optimizer import LpType, optimize_single
from app.engine.pool import PriceGrid
from app.engine.simulation import LedgerRow, SimulationContext
from app.engine.stackelberg import simulate_with_bot
from app.engine.stochastic import market_path
from app.helpers import streams
from app.schemas.report import MetricsSummary, PeriodSummary, ReportSummary
from app.schemas.scenario import ScenarioConfig
from app.services.calibration import (
    build_context,
    calibrate,
    load_pool,
    scenario_seed,
    type_grid,
    uniform_distribution,
)
from app.services.ingestion import load_market_path, load_pool_snapshot, load_type_distribution

logger = logging.getLogger(__name__)

LEDGER_COLUMNS = ["block", "swap", "engaged", "attacked", "bot_profit", "lp_fees_total", "pool_rate", "market_rate"]


@dataclass(eq=False)
class ReportBundle:
    """
    Everything a scenario run emits.

    liquidity: (H+1, d) with row 0 the starting snapshot and row h the
    liquidity frozen for period h.
    """

    summary: ReportSummary
    grid: Optional[PriceGrid] = None
    liquidity: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    target: Optional[np.ndarray] = None
    ledger: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=LEDGER_COLUMNS))


@dataclass(frozen=True, eq=False)
class PeriodSolution:
    liquidity: np.ndarray
    converged: bool
    iterations: int
    error: Optional[float]
    position: Optional[Tuple[int, int]] = None


# ==================== Helpers ====================

def market_rates(config: ScenarioConfig, context: SimulationContext) -> np.ndarray:
    """Market rate of every block of the horizon, from file or GBM."""
    horizon = config.simulation.horizon
    if config.market.path:
        rates = load_market_path(config.market.path, granularity_seconds=config.market.granularity_seconds)
        if rates.size < horizon:
            raise InvalidInputError(f"market path covers {rates.size} blocks, the scenario needs {horizon}")
        return rates[:horizon]
    rng = streams.stream(context.seed, streams.SCENARIO, 0)
    return market_path(context.market, context.market_rate, horizon, rng)[1:]


def period_seed(seed: int, period: int) -> int:
    return int(streams.stream(seed, streams.SCENARIO, period).integers(2 ** 32))


def _population(config: ScenarioConfig, context: SimulationContext, initial: np.ndarray) -> TypeDistribution:
    if config.type_distribution_path:
        return load_type_distribution(config.type_distribution_path)
    if initial.sum() <= 0:
        source = config.pool_path or "inline pool"
        raise InvalidInputError(
            f"{source}: snapshot has no liquidity; mode {config.game.mode!r} needs type_distribution_path"
        )
    if config.game.calibrate:
        return calibrate(config, initial, context).distribution
    return uniform_distribution(type_grid(config.game), context, float(initial.sum()))


def solve_period(
    config: ScenarioConfig,
    context: SimulationContext,
    previous: np.ndarray,
    distribution: Optional[TypeDistribution],
    players: Optional[List[LpType]],
) -> PeriodSolution:
    """
    Liquidity the LPs commit to for one period, played against ``previous``.

    In ``single`` and ``nplayer`` mode the LPs deploy their capital on top
    of ``previous``; mean-field play starts from it. A game that does not
    converge contributes its closest iterate and is flagged in the period
    summary.
    """
    game = config.game
    if game.mode == "single":
        lp = LpType(capital=game.lp.capital, risk_aversion=game.lp.risk_aversion, belief=game.lp.belief)
        position, _ = optimize_single(lp, previous, context)
        return PeriodSolution(previous + position.expand(context.d), True, 1, None, (position.lower, position.upper))

    if game.mode == "nplayer":
        try:
            eq = fictitious_play_nplayer(
                players, context, thresh=game.thresh, max_iter=game.max_iter, base_liquidity=previous
            )
            return PeriodSolution(eq.liquidity, True, eq.iterations, eq.errors[-1])
        except NonConvergenceError as e:
            logger.warning(f"N-player game did not converge, using the closest profile: {e}")
            liquidity = previous + profile_liquidity(players, e.best_iterate, context).sum(axis=0)
            return PeriodSolution(liquidity, False, len(e.errors), min(e.errors) if e.errors else None)

    try:
        eq = fictitious_play_mfg(
            previous, distribution, context, thresh=game.thresh, max_iter=game.max_iter, mass_tol=game.mass_tol
        )
        return PeriodSolution(eq.liquidity, True, eq.iterations, eq.errors[-1])
    except NonConvergenceError as e:
        logger.warning(f"Mean-field game did not converge, using the closest iterate: {e}")
        liquidity, _ = e.best_iterate
        return PeriodSolution(liquidity, False, len(e.errors), min(e.errors) if e.errors else None)


def _metrics(final: np.ndarray, target: np.ndarray, ledger: pd.DataFrame) -> MetricsSummary:
    metrics = MetricsSummary()
    if final.sum() > 0 and target.sum() > 0:
        metrics.w1_to_target = wasserstein1(final, target)
        metrics.mass_ratio = mass_ratio(final, target)
    try:
        metrics.r_score = r_score(final, target)
    except UndefinedMetricError:
        logger.warning("Target liquidity is constant; r-score left out")
    if not ledger.empty:
        metrics.mape = mape(ledger["pool_rate"].to_numpy(), ledger["market_rate"].to_numpy())
    return metrics


# ==================== Runner ====================

def run_scenario(config: ScenarioConfig) -> ReportBundle:
    """
    Run every period of ``config`` and collect the report bundle.

    Deterministic in (config, seed): every random draw comes from a stream
    keyed by the period, never from the thread count.
    """
    state = load_pool(config)
    seed = scenario_seed(config)
    base = build_context(config, state)
    rates = market_rates(config, base)
    snapshot = state.liquidity.copy()
    target = load_pool_snapshot(config.target_path).liquidity if config.target_path else snapshot
    game_bot = config.bot.to_config() if config.game.mode == "stackelberg" else None
    sim_bot = config.bot.to_config() if config.bot is not None else None
    period_length = config.simulation.period_length

    distribution = None
    players = None
    if config.game.mode in ("mfg", "stackelberg", "nplayer"):
        distribution = _population(config, base, snapshot)
    if config.game.mode == "nplayer":
        players = distribution.sample_types(config.game.n_players, streams.stream(seed, streams.TYPE_SAMPLES))
        logger.info(f"Sampled {len(players)} players: {players}")

    summary = ReportSummary(name=config.name, mode=config.game.mode, seed=seed, horizon=config.simulation.horizon)
    history = [snapshot]
    rows: List[LedgerRow] = []
    liquidity = snapshot
    pool_rate = state.pool_rate
    market_rate = base.market_rate

    for period in range(1, config.simulation.periods + 1):
        start = (period - 1) * period_length
        context = base.evolve(
            pool_rate=pool_rate,
            market_rate=market_rate,
            seed=period_seed(seed, period),
            bot=game_bot,
        )
        solution = solve_period(config, context, liquidity, distribution, players)
        liquidity = np.asarray(solution.liquidity, dtype=float)
        history.append(liquidity)

        ledger = simulate_with_bot(
            liquidity,
            sim_bot,
            context,
            streams.stream(seed, streams.SWAP_SEQUENCE, period),
            market_rates=rates[start:start + period_length],
        )
        period_rows = [replace(row, block=start + row.block) for row in ledger.rows]
        rows.extend(period_rows)
        summary.periods.append(PeriodSummary(
            period=period,
            start_block=start,
            pool_rate=pool_rate,
            market_rate=market_rate,
            liquidity_mass=float(liquidity.sum()),
            converged=solution.converged,
            iterations=solution.iterations,
            error=solution.error,
            lp_fees=ledger.lp_fees,
            bot_profit=ledger.bot_profit,
            attacks=ledger.attacks,
            swaps=sum(1 for r in period_rows if r.swap != 0.0),
            position=solution.position,
        ))
        logger.info(
            f"Period {period}/{config.simulation.periods}: mass {liquidity.sum():.6g}, "
            f"LP fees {ledger.lp_fees:.6g}, bot profit {ledger.bot_profit:.6g}"
        )
        if period_rows:
            pool_rate = period_rows[-1].pool_rate
            market_rate = period_rows[-1].market_rate

    frame = pd.DataFrame([r.__dict__ for r in rows], columns=LEDGER_COLUMNS)
    summary.total_lp_fees = float(frame["lp_fees_total"].sum()) if not frame.empty else 0.0
    summary.total_bot_profit = float(frame["bot_profit"].sum()) if not frame.empty else 0.0
    summary.counters = {
        "blocks": len(frame),
        "swaps": int((frame["swap"] != 0).sum()) if not frame.empty else 0,
        "attacks": int(frame["attacked"].sum()) if not frame.empty else 0,
        "unconverged_periods": sum(1 for p in summary.periods if not p.converged),
    }
    summary.metrics = _metrics(liquidity, target, frame)
    return ReportBundle(
        summary=summary,
        grid=state.grid,
        liquidity=np.vstack(history),
        target=np.asarray(target, dtype=float),
        ledger=frame,
    )
