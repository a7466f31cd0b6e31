"""
Metrics API Endpoints
"""

from fastapi import APIRouter

from app.api.dependencies import domain_errors
from app.engine.metrics import mape, mass_ratio, r_score, wasserstein1
from app.schemas.metrics import LiquidityPair, MetricOut, SeriesPair

router = APIRouter()


@router.post("/w1", response_model=MetricOut)
def w1(pair: LiquidityPair):
    """Wasserstein-1 distance in ticks between two normalized liquidity vectors."""
    with domain_errors("w1"):
        return MetricOut(name="w1", value=wasserstein1(pair.f, pair.g))


@router.post("/mass-ratio", response_model=MetricOut)
def ratio(pair: LiquidityPair):
    with domain_errors("mass ratio"):
        return MetricOut(name="mass_ratio", value=mass_ratio(pair.f, pair.g))


@router.post("/r-score", response_model=MetricOut)
def coefficient_of_determination(pair: SeriesPair):
    """r-score of ``a`` against the reference ``b``."""
    with domain_errors("r-score"):
        return MetricOut(name="r_score", value=r_score(pair.a, pair.b))


@router.post("/mape", response_model=MetricOut)
def percentage_error(pair: SeriesPair):
    with domain_errors("mape"):
        return MetricOut(name="mape", value=mape(pair.a, pair.b))
