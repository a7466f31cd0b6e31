"""
E2E tests specific fixtures.

E2E tests run whole scenarios: configuration file in, report bundle out,
through the worker or the command line.
"""

import json
import logging

import pytest

from tests.factories import scenario_payload


@pytest.fixture
def write_scenario(tmp_path):
    """Write a scenario file built from SMALL_SCENARIO plus overrides."""
    def _write(name: str, **sections):
        payload = scenario_payload(name=name, output_dir=str(tmp_path / "reports"), **sections)
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(payload))
        return path, payload
    return _write


@pytest.fixture
def snapshot_dir(tmp_path):
    """Pool and target snapshots next to the scenario files."""
    pool = (
        "# pool_rate=1.3\n# fee_rate=0.003\n"
        "tick_index,price_lower,price_upper,liquidity\n"
        "1,1.00,1.21,100\n2,1.21,1.44,100\n3,1.44,1.69,100\n4,1.69,1.96,100\n"
    )
    target = pool.replace("1,1.00,1.21,100", "1,1.00,1.21,40").replace("4,1.69,1.96,100", "4,1.69,1.96,160")
    (tmp_path / "pool.csv").write_text(pool)
    (tmp_path / "target.csv").write_text(target)
    return tmp_path


@pytest.fixture(autouse=True)
def restore_root_logger():
    """The CLI reconfigures the root logger; put it back afterwards."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers = handlers
    root.setLevel(level)
