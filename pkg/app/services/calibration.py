"""
Builders that turn a scenario configuration into engine objects, and the
calibration job run by the CLI and the worker.
"""

import logging
from typing import Optional

import numpy as np

from app.core.errors import UndefinedMetricError
from app.engine.games import (
    Calibration,
    StrategyProfile,
    TypeDistribution,
    TypeGrid,
    calibrate_mfg,
    calibrate_nplayer,
    mfg_liquidity,
)
from app.engine.metrics import r_score, wasserstein1
from app.engine.pool import PoolState
from app.engine.stochastic import (
    ArrivalModel,
    JointSwapDensity,
    MarketModel,
    fit_swap_density,
    synthetic_swap_history,
)
from app.engine.simulation import SimulationContext
from app.helpers import streams
from app.helpers.getters import getDefaultPaths, getDefaultSeed, getDefaultThreads, getPathBlock
from app.schemas.game import CalibrationOut
from app.schemas.scenario import GameIn, ScenarioConfig
from app.services.ingestion import load_density, load_pool_snapshot, load_swap_history

logger = logging.getLogger(__name__)


def load_pool(config: ScenarioConfig) -> PoolState:
    if config.pool is not None:
        return config.pool.to_state()
    return load_pool_snapshot(config.pool_path)


def scenario_seed(config: ScenarioConfig) -> int:
    return config.simulation.seed if config.simulation.seed is not None else getDefaultSeed()


def build_density(config: ScenarioConfig) -> JointSwapDensity:
    """Swap-size model from an export, a history file, or synthetic history."""
    section = config.density
    if section.density_path:
        return load_density(section.density_path)
    if section.history_path:
        sizes, arbitrage = load_swap_history(section.history_path)
    else:
        rng = streams.stream(scenario_seed(config), streams.SYNTHETIC_HISTORY)
        sizes, arbitrage = synthetic_swap_history(
            section.synthetic_samples,
            rng,
            arbitrage_scale=section.arbitrage_scale,
            small_size=section.small_size,
            large_size=section.large_size,
        )
        logger.info(f"No swap history given, fitted on {section.synthetic_samples} synthetic swaps")
    return fit_swap_density(sizes, arbitrage, grid_size=section.grid_size)


def build_context(config: ScenarioConfig, state: PoolState, density: Optional[JointSwapDensity] = None) -> SimulationContext:
    """
    Simulation context for one re-adjustment period of ``config``.

    Seed, paths, threads and path block fall back to the environment.
    """
    sim = config.simulation
    return SimulationContext(
        grid=state.grid,
        pool_rate=state.pool_rate,
        market_rate=sim.market_rate or state.pool_rate,
        fee_rate=state.fee_rate,
        density=density if density is not None else build_density(config),
        arrival=ArrivalModel(scale=config.arrival.scale, offset=config.arrival.offset),
        market=MarketModel(
            drift=config.market.drift,
            volatility=config.market.volatility,
            dt=config.market.dt,
            belief_scale=config.market.belief_scale,
        ),
        horizon=sim.period_length,
        n_paths=sim.n_paths or getDefaultPaths(),
        seed=scenario_seed(config),
        path_block=sim.path_block or getPathBlock(),
        threads=sim.threads or getDefaultThreads(),
    )


def type_grid(game: GameIn) -> TypeGrid:
    return TypeGrid(
        capitals=tuple(game.capitals),
        lambda_max=game.lambda_max,
        n_lambda=game.n_lambda,
        beliefs=tuple(game.beliefs),
    )


def uniform_distribution(grid: TypeGrid, context: SimulationContext, mass: float) -> TypeDistribution:
    """Equal weight on every grid type, scaled so full-range positions carry ``mass``."""
    distribution = TypeDistribution.from_type_masses(grid, np.ones(grid.shape), smooth=False)
    full_range = StrategyProfile(tuple((1, context.d + 1) for _ in range(grid.size)))
    per_population = float(mfg_liquidity(full_range, distribution, context).sum())
    return TypeDistribution(
        grid, distribution.cell_weights, distribution.lambda_density, population=mass / per_population
    )


def calibrate(config: ScenarioConfig, target: np.ndarray, context: SimulationContext) -> Calibration:
    game = config.game
    grid = type_grid(game)
    if game.calibration == "nplayer":
        return calibrate_nplayer(
            target,
            max(game.n_players, 2),
            grid,
            context,
            capital_weights=game.capital_weights,
            n_samples=game.n_samples,
            paths_per_sample=game.paths_per_sample,
            smooth=game.smooth,
        )
    return calibrate_mfg(target, grid, context, smooth=game.smooth)


def calibrate_snapshot(config: ScenarioConfig) -> CalibrationOut:
    """Calibrate a type distribution against the scenario's pool snapshot."""
    state = load_pool(config)
    context = build_context(config, state)
    calibration = calibrate(config, state.liquidity, context)
    regenerated = mfg_liquidity(calibration.strategy, calibration.distribution, context)
    distance = wasserstein1(regenerated, state.liquidity)
    try:
        fit = r_score(regenerated, state.liquidity)
        logger.info(f"Calibration reproduces the snapshot with W1 {distance:.4f} ticks, r-score {fit:.4f}")
    except UndefinedMetricError:
        logger.info(f"Calibration reproduces the snapshot with W1 {distance:.4f} ticks")
    return CalibrationOut.from_calibration(calibration, w1_to_target=distance)
