"""
Report bundle summary written next to the series files of a scenario run.
"""

from typing import Dict, List, Optional, Tuple
from pydantic import BaseModel, Field

REPORT_VERSION = 1


class PeriodSummary(BaseModel):
    """One re-adjustment period"""
    period: int = Field(..., ge=1)
    start_block: int = Field(..., ge=0)
    pool_rate: float
    market_rate: float
    liquidity_mass: float
    converged: bool
    iterations: int = 0
    error: Optional[float] = Field(None, description="Last fictitious-play W1, ticks")
    lp_fees: float = 0.0
    bot_profit: float = 0.0
    attacks: int = 0
    swaps: int = 0
    position: Optional[Tuple[int, int]] = Field(None, description="Chosen range in single mode")


class MetricsSummary(BaseModel):
    w1_to_target: Optional[float] = None
    mass_ratio: Optional[float] = None
    r_score: Optional[float] = None
    mape: Optional[float] = Field(None, description="Pool rate against market rate, percent")


class ReportSummary(BaseModel):
    schema_version: int = REPORT_VERSION
    name: str
    mode: str
    seed: int
    horizon: int
    periods: List[PeriodSummary] = Field(default_factory=list)
    metrics: MetricsSummary = Field(default_factory=MetricsSummary)
    total_lp_fees: float = 0.0
    total_bot_profit: float = 0.0
    counters: Dict[str, int] = Field(default_factory=dict)
