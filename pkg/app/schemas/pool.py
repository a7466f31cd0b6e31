"""
Pydantic schemas for pool state and pool operations.
"""

from typing import List, Optional
from pydantic import BaseModel, Field, model_validator

from app.engine.pool import LiquidityPosition, PoolState, PriceGrid


class PoolIn(BaseModel):
    """Pool state as sent by clients; ticks are 1-based"""
    points: List[float] = Field(..., min_length=2, description="Tick boundaries p_1..p_{d+1}")
    liquidity: List[float] = Field(..., description="Liquidity per tick, length d")
    pool_rate: float = Field(..., gt=0)
    fee_rate: float = Field(0.0, ge=0, lt=1)

    @model_validator(mode="after")
    def check_lengths(self):
        if len(self.liquidity) != len(self.points) - 1:
            raise ValueError("liquidity must have one entry per tick")
        return self

    def to_state(self) -> PoolState:
        return PoolState(PriceGrid(self.points), self.liquidity, self.pool_rate, self.fee_rate)

    @classmethod
    def from_state(cls, state: PoolState) -> "PoolIn":
        return cls(
            points=state.grid.points.tolist(),
            liquidity=state.liquidity.tolist(),
            pool_rate=state.pool_rate,
            fee_rate=state.fee_rate,
        )


class PoolOut(PoolIn):
    """Pool state with derived fields"""
    active_tick: int
    token_a: List[float]
    token_b: List[float]

    @classmethod
    def from_state(cls, state: PoolState) -> "PoolOut":
        token_a, token_b = state.reserves()
        return cls(
            points=state.grid.points.tolist(),
            liquidity=state.liquidity.tolist(),
            pool_rate=state.pool_rate,
            fee_rate=state.fee_rate,
            active_tick=state.active_tick,
            token_a=token_a.tolist(),
            token_b=token_b.tolist(),
        )


class PositionIn(BaseModel):
    """Liquidity position over ticks lower..upper-1"""
    lower: int = Field(..., ge=1)
    upper: int = Field(..., ge=2)
    units_per_tick: float = Field(0.0, ge=0)

    def to_position(self) -> LiquidityPosition:
        return LiquidityPosition(self.lower, self.upper, self.units_per_tick)


class TokensRequest(BaseModel):
    """Tokens backing some liquidity in one tick"""
    pool: PoolIn
    tick: int = Field(..., ge=1)
    liquidity: float = Field(..., ge=0)


class TokensOut(BaseModel):
    token_a: float
    token_b: float


class LiquidityPerTickRequest(BaseModel):
    """Capital converted to units of liquidity on a range"""
    pool: PoolIn
    lower: int = Field(..., ge=1)
    upper: int = Field(..., ge=2)
    capital: float = Field(..., ge=0)
    market_rate: Optional[float] = Field(None, gt=0, description="Defaults to the pool rate")


class LiquidityPerTickOut(BaseModel):
    units_per_tick: float
    token_a: float
    token_b: float


class AddLiquidityRequest(BaseModel):
    pool: PoolIn
    position: PositionIn


class SwapRequest(BaseModel):
    """Swap of x token B; negative x withdraws token B"""
    pool: PoolIn
    x: float
    allow_partial: bool = False


class SwapOut(BaseModel):
    token_a_delta: float
    token_b_delta: float
    new_pool_rate: float
    new_active_tick: int
    fees_per_tick: List[float]
    total_fees: float


class BoundariesOut(BaseModel):
    boundaries: List[float]
