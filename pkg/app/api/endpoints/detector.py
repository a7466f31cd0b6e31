"""
Detector API Endpoints
"""

from fastapi import APIRouter

from app.api.dependencies import domain_errors
from app.schemas.transaction import DetectOut, DetectRequest
from app.services.detector import detect_sandwich_attacks, summarize_attacks

router = APIRouter()


@router.post("/detect", response_model=DetectOut)
def detect(request: DetectRequest):
    """Flag sandwich attacks among the submitted records."""
    with domain_errors("detect"):
        attacks = detect_sandwich_attacks(request.records, tolerance=request.tolerance)
    return DetectOut(attacks=attacks, summary=summarize_attacks(attacks))
