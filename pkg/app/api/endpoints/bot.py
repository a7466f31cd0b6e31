"""
Bot API Endpoints

JIT attack thresholds and the bot's per-swap value.
"""

from fastapi import APIRouter

from app.api.dependencies import domain_errors
from app.engine.bot import bot_fee_share, bot_thresholds, bot_value
from app.schemas.bot import BotValueOut, BotValueRequest, ThresholdsOut, ThresholdsRequest

router = APIRouter()


@router.post("/thresholds", response_model=ThresholdsOut)
def thresholds(request: ThresholdsRequest):
    """Swap sizes outside [lower, upper] are attacked."""
    with domain_errors("bot thresholds"):
        state = request.pool.to_state()
        bot = request.bot.to_config()
        strategy = bot_thresholds(state, request.market_rate or state.pool_rate, bot)
        share = bot_fee_share(state, bot)
    return ThresholdsOut(lower=strategy.lower, upper=strategy.upper, fee_share=share)


@router.post("/value", response_model=BotValueOut)
def value(request: BotValueRequest):
    with domain_errors("bot value"):
        result = bot_value(
            int(request.attack),
            request.xi,
            request.liquidity,
            request.pool.to_state(),
            request.market_rate,
            request.gas,
        )
    return BotValueOut(value=result)
