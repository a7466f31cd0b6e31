"""
Pydantic schemas for the JIT bot endpoints.
"""

from typing import Optional
from pydantic import BaseModel, Field

from app.engine.bot import DEFAULT_ENGAGEMENT, DEFAULT_GAS, BotConfig
from app.schemas.pool import PoolIn


class BotConfigIn(BaseModel):
    """Bot liquidity (units), gas (token B) and engagement probability"""
    liquidity: float = Field(..., gt=0)
    gas: float = Field(DEFAULT_GAS, ge=0)
    engagement: float = Field(DEFAULT_ENGAGEMENT, ge=0, le=1)

    def to_config(self) -> BotConfig:
        return BotConfig(self.liquidity, self.gas, self.engagement)


class BotValueRequest(BaseModel):
    pool: PoolIn
    xi: float
    market_rate: float = Field(..., gt=0)
    liquidity: float = Field(..., gt=0)
    gas: float = Field(DEFAULT_GAS, ge=0)
    attack: bool = True


class BotValueOut(BaseModel):
    value: float


class ThresholdsRequest(BaseModel):
    pool: PoolIn
    bot: BotConfigIn
    market_rate: Optional[float] = Field(None, gt=0, description="Defaults to the pool rate")


class ThresholdsOut(BaseModel):
    lower: float
    upper: float
    fee_share: float
