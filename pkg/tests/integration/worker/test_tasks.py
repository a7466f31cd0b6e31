"""
Integration tests for the Celery tasks, called directly.
"""

import json
from pathlib import Path

import pytest

from app.core.errors import ConfigVersionError
from app.mycelery.worker import calibrate_snapshot_task, run_scenario_task
from app.services.ingestion import load_type_distribution
from app.services.reports import load_reports


@pytest.mark.integration
class TestRunScenarioTask:
    def test_writes_reports(self, scenario_json):
        result = run_scenario_task.delay(scenario_json).get()

        directory = Path(scenario_json["output_dir"]) / "small"
        bundle = load_reports(directory)
        assert bundle.summary.model_dump(mode="json") == result["summary"]
        assert bundle.liquidity.shape == (3, 4)

    def test_summary_is_json(self, scenario_json):
        result = run_scenario_task.delay(scenario_json).get()

        assert json.loads(json.dumps(result)) == result

    def test_rejects_unknown_version(self, scenario_json):
        scenario_json["schema_version"] = 9

        with pytest.raises(ConfigVersionError):
            run_scenario_task.delay(scenario_json).get()


@pytest.mark.integration
class TestCalibrateTask:
    def test_exports_distribution(self, scenario_json):
        result = calibrate_snapshot_task.delay(scenario_json).get()

        distribution = load_type_distribution(result["file"])
        assert distribution.population == pytest.approx(result["calibration"]["distribution"]["population"])
        assert distribution.grid.capitals == (1000.0, 5000.0)
