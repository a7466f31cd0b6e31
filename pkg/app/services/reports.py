"""
Report files of a scenario run.

    summary.json    ReportSummary
    ledger.csv      one row per simulated block
    rates.csv       block, pool_rate, market_rate
    liquidity.csv   liquidity per (period, tick) with tick bounds; period 0 is the start
    target.csv      tick, liquidity of the comparison target
"""

import json
import logging
from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd

from app.engine.pool import PriceGrid
from app.schemas.report import ReportSummary
from app.services.scenario import LEDGER_COLUMNS, ReportBundle

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"
LEDGER_FILE = "ledger.csv"
RATES_FILE = "rates.csv"
LIQUIDITY_FILE = "liquidity.csv"
TARGET_FILE = "target.csv"
FLOAT_FORMAT = "%.17g"


def liquidity_histograms(bundle: ReportBundle) -> pd.DataFrame:
    """Long-format liquidity per period, ready for bar plots."""
    periods, d = bundle.liquidity.shape
    points = bundle.grid.points
    return pd.DataFrame({
        "period": np.repeat(np.arange(periods), d),
        "tick": np.tile(np.arange(1, d + 1), periods),
        "price_lower": np.tile(points[:-1], periods),
        "price_upper": np.tile(points[1:], periods),
        "liquidity": bundle.liquidity.ravel(),
    })


def emit_reports(bundle: ReportBundle, directory: Union[str, Path]) -> List[Path]:
    """Write the bundle under ``directory``; returns the files written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []

    summary_path = directory / SUMMARY_FILE
    summary_path.write_text(bundle.summary.model_dump_json(indent=2))
    written.append(summary_path)

    if bundle.summary.periods:
        ledger = bundle.ledger[LEDGER_COLUMNS]
        ledger.to_csv(directory / LEDGER_FILE, index=False, float_format=FLOAT_FORMAT)
        ledger[["block", "pool_rate", "market_rate"]].to_csv(directory / RATES_FILE, index=False, float_format=FLOAT_FORMAT)
        liquidity_histograms(bundle).to_csv(directory / LIQUIDITY_FILE, index=False, float_format=FLOAT_FORMAT)
        written += [directory / LEDGER_FILE, directory / RATES_FILE, directory / LIQUIDITY_FILE]
        if bundle.target is not None:
            pd.DataFrame({"tick": np.arange(1, bundle.target.size + 1), "liquidity": bundle.target}).to_csv(
                directory / TARGET_FILE, index=False, float_format=FLOAT_FORMAT
            )
            written.append(directory / TARGET_FILE)

    logger.info(f"Wrote {len(written)} report files to {directory}")
    return written


def load_reports(directory: Union[str, Path]) -> ReportBundle:
    """Read a bundle written by ``emit_reports``."""
    directory = Path(directory)
    summary = ReportSummary.model_validate(json.loads((directory / SUMMARY_FILE).read_text()))
    if not (directory / LIQUIDITY_FILE).exists():
        return ReportBundle(summary=summary)

    ledger = pd.read_csv(directory / LEDGER_FILE)
    histograms = pd.read_csv(directory / LIQUIDITY_FILE).sort_values(["period", "tick"])
    periods = int(histograms["period"].max()) + 1
    liquidity = histograms["liquidity"].to_numpy().reshape(periods, -1)
    first = histograms[histograms["period"] == 0]
    grid = PriceGrid(np.append(first["price_lower"].to_numpy(), first["price_upper"].to_numpy()[-1]))
    target = None
    if (directory / TARGET_FILE).exists():
        target = pd.read_csv(directory / TARGET_FILE).sort_values("tick")["liquidity"].to_numpy()
    return ReportBundle(summary=summary, grid=grid, liquidity=liquidity, target=target, ledger=ledger)
