"""
Pool API Endpoints

Stateless CPMM operations: every request carries the pool it acts on.
"""

from fastapi import APIRouter

from app.api.dependencies import domain_errors
from app.engine.pool import (
    add_liquidity,
    execute_swap,
    liquidity_per_tick,
    position_tokens,
    swap_boundaries,
    tokens_from_liquidity,
    LiquidityPosition,
)
from app.schemas.pool import (
    AddLiquidityRequest,
    BoundariesOut,
    LiquidityPerTickOut,
    LiquidityPerTickRequest,
    PoolIn,
    PoolOut,
    SwapOut,
    SwapRequest,
    TokensOut,
    TokensRequest,
)

router = APIRouter()


# ==================== Liquidity ====================

@router.post("/tokens", response_model=TokensOut)
def tokens(request: TokensRequest):
    """Token A and token B backing ``liquidity`` units in one tick."""
    with domain_errors("tokens"):
        state = request.pool.to_state()
        token_a, token_b = tokens_from_liquidity(request.liquidity, request.tick, state.grid, state.pool_rate)
    return TokensOut(token_a=token_a, token_b=token_b)


@router.post("/liquidity-per-tick", response_model=LiquidityPerTickOut)
def units_for_capital(request: LiquidityPerTickRequest):
    """Units per tick a capital buys on [lower, upper), with the token split."""
    with domain_errors("liquidity per tick"):
        state = request.pool.to_state()
        market_rate = request.market_rate or state.pool_rate
        units = liquidity_per_tick(request.lower, request.upper, request.capital, market_rate, state.grid, state.pool_rate)
        token_a, token_b = position_tokens(LiquidityPosition(request.lower, request.upper, units), state.grid, state.pool_rate)
    return LiquidityPerTickOut(units_per_tick=units, token_a=token_a, token_b=token_b)


@router.post("/add", response_model=PoolOut)
def add(request: AddLiquidityRequest):
    with domain_errors("add liquidity"):
        state = add_liquidity(request.pool.to_state(), request.position.to_position())
    return PoolOut.from_state(state)


# ==================== Swaps ====================

@router.post("/boundaries", response_model=BoundariesOut)
def boundaries(pool: PoolIn):
    """Cumulative token-B capacity at every tick boundary."""
    with domain_errors("swap boundaries"):
        values = swap_boundaries(pool.to_state())
    return BoundariesOut(boundaries=values.tolist())


@router.post("/swap", response_model=SwapOut)
def swap(request: SwapRequest):
    """
    Execute a swap of ``x`` token B.

    Swaps beyond the pool's capacity are rejected with 422 unless
    ``allow_partial`` is set.
    """
    with domain_errors("swap"):
        outcome = execute_swap(request.pool.to_state(), request.x, allow_partial=request.allow_partial)
    return SwapOut(
        token_a_delta=outcome.token_a_delta,
        token_b_delta=outcome.token_b_delta,
        new_pool_rate=outcome.new_pool_rate,
        new_active_tick=outcome.new_active_tick,
        fees_per_tick=outcome.fees_per_tick.tolist(),
        total_fees=outcome.total_fees,
    )
