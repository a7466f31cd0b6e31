"""
Pydantic schemas for on-chain transaction records and detected attacks.

Token deltas are pool-side: positive means tokens flowed into the pool.
"""

from typing import Dict, List, Literal, Optional
from pydantic import BaseModel, Field, field_validator

TransactionKind = Literal["swap", "add_liquidity", "remove_liquidity"]
AttackKind = Literal["swap_based", "liquidity_based"]


class TransactionRecord(BaseModel):
    """One pool interaction"""
    block: int = Field(..., ge=0)
    index: int = Field(..., ge=0, description="Position within the block")
    account: str = Field(..., min_length=1)
    kind: TransactionKind
    token_a: float
    token_b: float
    market_rate: Optional[float] = Field(None, gt=0, description="Token A price in token B at this block")

    class Config:
        frozen = True

    @field_validator("token_a", "token_b")
    @classmethod
    def finite(cls, value: float) -> float:
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("token deltas must be finite")
        return value


class AttackOut(BaseModel):
    """Flagged front-run / victim / back-run triple"""
    block: int
    attacker: str
    victim: str
    kind: AttackKind
    symmetry_error: float
    front: TransactionRecord
    middle: TransactionRecord
    back: TransactionRecord
    profit: Optional[float] = None


class DetectRequest(BaseModel):
    records: List[TransactionRecord]
    tolerance: float = Field(0.05, ge=0, lt=1)


class AttackSummary(BaseModel):
    total: int
    by_kind: Dict[str, int]
    liquidity_share: float
    total_profit: Optional[float] = None


class DetectOut(BaseModel):
    attacks: List[AttackOut]
    summary: AttackSummary
