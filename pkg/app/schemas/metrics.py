"""
Pydantic schemas for metric endpoints.
"""

from typing import List
from pydantic import BaseModel, Field


class SeriesPair(BaseModel):
    """Two equally long series; b is the reference"""
    a: List[float] = Field(..., min_length=1)
    b: List[float] = Field(..., min_length=1)


class LiquidityPair(BaseModel):
    """Two liquidity vectors over the same ticks"""
    f: List[float] = Field(..., min_length=1)
    g: List[float] = Field(..., min_length=1)


class MetricOut(BaseModel):
    name: str
    value: float
