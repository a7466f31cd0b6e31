"""
Integration tests specific fixtures.

Integration tests go through the HTTP client, the eager Celery worker and
the command line; every file they write lives under tmp_path.
"""

import json

import pytest

from tests.conftest import SWAP_LIQUIDITY, TOY_POINTS, TOY_RATE
from tests.factories import scenario_payload

SNAPSHOT = """# pool_rate=1.6
# fee_rate=0.003
tick_index,price_lower,price_upper,liquidity
1,1.00,1.21,100
2,1.21,1.44,100
3,1.44,1.69,100.956
4,1.69,1.96,113.75
5,1.96,2.25,131.25
6,2.25,2.56,150
"""


@pytest.fixture
def swap_pool_json():
    """The fee-free walk-through pool as the API expects it."""
    return {"points": TOY_POINTS, "liquidity": SWAP_LIQUIDITY, "pool_rate": TOY_RATE, "fee_rate": 0.0}


@pytest.fixture
def scenario_json(tmp_path):
    """Small mfg scenario whose reports go under tmp_path."""
    return scenario_payload(output_dir=str(tmp_path / "reports"))


@pytest.fixture
def scenario_file(tmp_path, scenario_json):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario_json))
    return path


@pytest.fixture
def snapshot_file(tmp_path):
    """Walk-through pool with a 30 bp fee as a snapshot file."""
    path = tmp_path / "pool.csv"
    path.write_text(SNAPSHOT)
    return path
