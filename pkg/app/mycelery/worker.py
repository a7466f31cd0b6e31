import logging
from pathlib import Path
from typing import Any, Dict, Optional

from app.core.logging import capture_error
from app.helpers.getters import getOutputDir
from app.mycelery.app import celery_app
from app.schemas.scenario import parse_scenario
from app.services.calibration import calibrate_snapshot
from app.services.ingestion import export_type_distribution
from app.services.reports import emit_reports
from app.services.scenario import run_scenario

logger = logging.getLogger(__name__)


def _output_dir(name: str, configured: Optional[str] = None) -> Path:
    return Path(configured or getOutputDir()) / name


@celery_app.task(name="run_scenario")
def run_scenario_task(config: Dict[str, Any]) -> Dict[str, Any]:
    """Run a scenario and write its reports; returns the summary and the files written."""
    scenario = parse_scenario(config)
    logger.info(f"Running scenario {scenario.name} ({scenario.game.mode}, {scenario.simulation.periods} periods)")
    try:
        bundle = run_scenario(scenario)
        files = emit_reports(bundle, _output_dir(scenario.name, scenario.output_dir))
    except Exception as e:
        capture_error(e, context={"scenario": {"name": scenario.name, "mode": scenario.game.mode}}, tags={"task": "run_scenario"})
        raise
    return {
        "summary": bundle.summary.model_dump(mode="json"),
        "files": [str(f) for f in files],
    }


@celery_app.task(name="calibrate_snapshot")
def calibrate_snapshot_task(config: Dict[str, Any]) -> Dict[str, Any]:
    """Calibrate a type distribution against the scenario's snapshot and export it."""
    scenario = parse_scenario(config)
    try:
        result = calibrate_snapshot(scenario)
        path = export_type_distribution(
            result.distribution.to_distribution(),
            _output_dir(scenario.name, scenario.output_dir) / "type_distribution.json",
        )
    except Exception as e:
        capture_error(e, context={"scenario": {"name": scenario.name}}, tags={"task": "calibrate_snapshot"})
        raise
    return {"calibration": result.model_dump(mode="json"), "file": str(path)}
