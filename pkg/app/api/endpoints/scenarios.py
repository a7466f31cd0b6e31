"""
Scenario API Endpoints

Scenarios run on the Celery worker; small ones can run inside the request.
"""

from celery.result import AsyncResult
from fastapi import APIRouter, Depends, status

from app.api.dependencies import domain_errors, require_inline_budget
from app.mycelery.app import celery_app
from app.mycelery.worker import calibrate_snapshot_task, run_scenario_task
from app.schemas.report import ReportSummary
from app.schemas.scenario import ScenarioConfig, ScenarioStatus, ScenarioSubmitted
from app.services.scenario import run_scenario

router = APIRouter()


# ==================== Worker ====================

@router.post("", response_model=ScenarioSubmitted, status_code=status.HTTP_202_ACCEPTED)
def submit(config: ScenarioConfig):
    """Queue a scenario run; poll ``GET /api/scenarios/{task_id}`` for the result."""
    task = run_scenario_task.delay(config.model_dump(mode="json"))
    return ScenarioSubmitted(task_id=task.id, status=task.status)


@router.post("/calibrate", response_model=ScenarioSubmitted, status_code=status.HTTP_202_ACCEPTED)
def submit_calibration(config: ScenarioConfig):
    task = calibrate_snapshot_task.delay(config.model_dump(mode="json"))
    return ScenarioSubmitted(task_id=task.id, status=task.status)


@router.get("/{task_id}", response_model=ScenarioStatus)
def task_status(task_id: str):
    result = AsyncResult(task_id, app=celery_app)
    if result.failed():
        return ScenarioStatus(task_id=task_id, status=result.status, error=str(result.result))
    return ScenarioStatus(
        task_id=task_id,
        status=result.status,
        result=result.result if result.successful() else None,
    )


# ==================== Inline ====================

@router.post("/run", response_model=ReportSummary)
def run_inline(config: ScenarioConfig = Depends(require_inline_budget)):
    """Run a small scenario synchronously and return its summary (no files are written)."""
    with domain_errors("run scenario"):
        bundle = run_scenario(config)
    return bundle.summary
