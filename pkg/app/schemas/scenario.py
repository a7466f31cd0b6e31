"""
Scenario configuration file (versioned JSON).

Every numeric default of a simulation run lives here; the environment only
supplies seed, thread count, path count and output directory when the file
leaves them out.
"""

from typing import Any, Dict, Literal, Optional, Tuple
from pydantic import BaseModel, Field, model_validator

from app.core.errors import ConfigVersionError
from app.engine.optimizer import BELIEFS, DEFAULT_CAPITALS, LAMBDA_MAX_NPLAYER
from app.engine.games import (
    DEFAULT_MASS_TOLERANCE,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_THRESHOLD,
    N_LAMBDA,
    OBSERVED_CAPITAL_WEIGHTS,
)
from app.schemas.bot import BotConfigIn
from app.schemas.pool import PoolIn

SCHEMA_VERSION = 1

GameMode = Literal["single", "nplayer", "mfg", "stackelberg"]


class ArrivalIn(BaseModel):
    scale: float = Field(0.01145, ge=0)
    offset: float = 0.6169


class MarketIn(BaseModel):
    """GBM parameters, or a rate file at ``granularity_seconds`` resolution"""
    drift: float = 0.0
    volatility: float = Field(0.00106, ge=0)
    dt: float = Field(12.0, gt=0)
    belief_scale: float = Field(1e-3, ge=0)
    path: Optional[str] = None
    granularity_seconds: int = Field(60, ge=1)


class DensityIn(BaseModel):
    """Swap-size model: a fitted export, a history file, or synthetic history"""
    density_path: Optional[str] = None
    history_path: Optional[str] = None
    grid_size: int = Field(256, ge=8)
    synthetic_samples: int = Field(2000, ge=3)
    arbitrage_scale: float = Field(1.0, gt=0)
    small_size: float = Field(1e2, gt=0)
    large_size: float = Field(1e4, gt=0)


class LpIn(BaseModel):
    """The single optimizing LP of ``mode = single``"""
    capital: float = Field(DEFAULT_CAPITALS[1], gt=0)
    risk_aversion: float = Field(0.0, ge=0)
    belief: int = 0


class GameIn(BaseModel):
    mode: GameMode = "mfg"
    capitals: Tuple[float, ...] = DEFAULT_CAPITALS
    capital_weights: Tuple[float, ...] = OBSERVED_CAPITAL_WEIGHTS
    lambda_max: float = Field(LAMBDA_MAX_NPLAYER, ge=0)
    n_lambda: int = Field(N_LAMBDA, ge=1)
    beliefs: Tuple[int, ...] = BELIEFS
    thresh: float = Field(DEFAULT_THRESHOLD, gt=0)
    mass_tol: float = Field(DEFAULT_MASS_TOLERANCE, gt=0, description="Relative mass gap allowed at a mean-field fixed point")
    max_iter: int = Field(DEFAULT_MAX_ITERATIONS, ge=1)
    n_players: int = Field(3, ge=1)
    n_samples: Optional[int] = Field(None, ge=1)
    paths_per_sample: int = Field(50, ge=2)
    smooth: bool = True
    calibrate: bool = Field(True, description="Calibrate types against the snapshot before the first period")
    calibration: Literal["mfg", "nplayer"] = "mfg"
    lp: LpIn = Field(default_factory=LpIn)

    @model_validator(mode="after")
    def check_weights(self):
        if len(self.capital_weights) != len(self.capitals):
            raise ValueError("one capital weight per capital is required")
        return self


class SimulationIn(BaseModel):
    period_length: int = Field(900, ge=1, description="Blocks between LP re-adjustments")
    periods: int = Field(8, ge=1)
    n_paths: Optional[int] = Field(None, ge=2)
    seed: Optional[int] = None
    threads: Optional[int] = Field(None, ge=1)
    path_block: Optional[int] = Field(None, ge=1)
    market_rate: Optional[float] = Field(None, gt=0, description="Starting market rate, defaults to the pool rate")

    @property
    def horizon(self) -> int:
        return self.period_length * self.periods


class ScenarioConfig(BaseModel):
    """One simulation scenario"""
    schema_version: int = SCHEMA_VERSION
    name: str = "scenario"
    pool_path: Optional[str] = None
    pool: Optional[PoolIn] = None
    target_path: Optional[str] = Field(None, description="Snapshot compared against the final liquidity")
    type_distribution_path: Optional[str] = None
    arrival: ArrivalIn = Field(default_factory=ArrivalIn)
    market: MarketIn = Field(default_factory=MarketIn)
    density: DensityIn = Field(default_factory=DensityIn)
    bot: Optional[BotConfigIn] = None
    game: GameIn = Field(default_factory=GameIn)
    simulation: SimulationIn = Field(default_factory=SimulationIn)
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def check_pool(self):
        if (self.pool_path is None) == (self.pool is None):
            raise ValueError("exactly one of pool_path and pool is required")
        if self.game.mode == "stackelberg" and self.bot is None:
            raise ValueError("stackelberg mode needs a bot configuration")
        return self


class ScenarioSubmitted(BaseModel):
    task_id: str
    status: str


class ScenarioStatus(BaseModel):
    task_id: str
    status: str
    result: Optional[Dict[str, Any]] = None
    error: Optional[str] = None


def parse_scenario(data: Dict[str, Any]) -> ScenarioConfig:
    """Validate a scenario document, rejecting unknown schema versions."""
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigVersionError(f"scenario schema_version {version!r} is not supported (expected {SCHEMA_VERSION})")
    return ScenarioConfig.model_validate(data)
