"""
Command line for the liquidity lab.

    python -m app.cli --out reports/ simulate scenario.json
    python -m app.cli calibrate scenario.json
    python -m app.cli detect records.csv
    python -m app.cli thresholds snapshot.csv --L 5e5 --G 20 --gamma 0.0005
    python -m app.cli metrics a.csv b.csv

Exit status is 2 for domain errors (bad input, unconverged games, parse
errors) and 1 for anything else.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app.core.errors import InvalidInputError, LiquidityLabError, UndefinedMetricError, ZeroMassError
from app.core.logging import capture_error, setup_logging
from app.engine.bot import BotConfig, DEFAULT_GAS, bot_fee_share, bot_thresholds
from app.engine.metrics import mape, mass_ratio, r_score, wasserstein1
from app.helpers.getters import getOutputDir
from app.schemas.scenario import ScenarioConfig
from app.schemas.transaction import DetectOut
from app.services.calibration import calibrate_snapshot
from app.services.detector import DEFAULT_TOLERANCE, detect_sandwich_attacks, summarize_attacks
from app.services.ingestion import (
    export_type_distribution,
    load_pool_snapshot,
    load_scenario,
    load_series,
    load_transaction_records,
)
from app.services.reports import emit_reports
from app.services.scenario import run_scenario

logger = logging.getLogger(__name__)


def _print(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _scenario(args) -> ScenarioConfig:
    config = load_scenario(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if overrides:
        config = config.model_copy(update={"simulation": config.simulation.model_copy(update=overrides)})
    return config


def _out_dir(args, config: Optional[ScenarioConfig] = None) -> Path:
    if args.out:
        return Path(args.out)
    if config is not None:
        return Path(config.output_dir or getOutputDir()) / config.name
    return Path(getOutputDir())


# ==================== Verbs ====================

def cmd_simulate(args) -> int:
    config = _scenario(args)
    bundle = run_scenario(config)
    files = emit_reports(bundle, _out_dir(args, config))
    _print({"summary": bundle.summary.model_dump(mode="json"), "files": [str(f) for f in files]})
    return 0


def cmd_calibrate(args) -> int:
    config = _scenario(args)
    result = calibrate_snapshot(config)
    path = export_type_distribution(result.distribution.to_distribution(), _out_dir(args, config) / "type_distribution.json")
    payload = result.model_dump(mode="json")
    payload.pop("distribution")
    payload["file"] = str(path)
    _print(payload)
    return 0


def cmd_detect(args) -> int:
    records = load_transaction_records(args.records)
    attacks = detect_sandwich_attacks(records, tolerance=args.tolerance)
    _print(DetectOut(attacks=attacks, summary=summarize_attacks(attacks)).model_dump(mode="json"))
    return 0


def cmd_thresholds(args) -> int:
    state = load_pool_snapshot(args.snapshot)
    if args.gamma is not None:
        state = state.with_fee_rate(args.gamma)
    bot = BotConfig(liquidity=args.L, gas=args.G)
    market_rate = args.market_rate or state.pool_rate
    strategy = bot_thresholds(state, market_rate, bot)
    _print({
        "lower": strategy.lower,
        "upper": strategy.upper,
        "active_tick": state.active_tick,
        "fee_share": bot_fee_share(state, bot),
    })
    return 0


def cmd_metrics(args) -> int:
    a = load_series(args.a)
    b = load_series(args.b)
    if a.shape != b.shape:
        raise InvalidInputError(f"{args.a} has {a.size} values, {args.b} has {b.size}")
    payload = {}
    for name, metric in (("w1", wasserstein1), ("mass_ratio", mass_ratio), ("r_score", r_score), ("mape", mape)):
        try:
            payload[name] = metric(a, b)
        except (InvalidInputError, UndefinedMetricError, ZeroMassError) as e:
            logger.warning(f"{name} undefined: {e}")
            payload[name] = None
    _print(payload)
    return 0


# ==================== Entry point ====================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liquidity-lab", description="Concentrated-liquidity simulation lab")
    parser.add_argument("--seed", type=int, default=None, help="Root seed (overrides the scenario and SIM_SEED)")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads for Monte-Carlo blocks")
    parser.add_argument("--out", default=None, help="Output directory")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ...")
    parser.add_argument("--log-format", choices=["text", "json"], default=None)
    verbs = parser.add_subparsers(dest="verb", required=True)

    simulate = verbs.add_parser("simulate", help="Run a scenario and write its reports")
    simulate.add_argument("config")
    simulate.set_defaults(handler=cmd_simulate)

    calibrate = verbs.add_parser("calibrate", help="Calibrate a type distribution against the scenario snapshot")
    calibrate.add_argument("config")
    calibrate.set_defaults(handler=cmd_calibrate)

    detect = verbs.add_parser("detect", help="Flag sandwich attacks in transaction records")
    detect.add_argument("records")
    detect.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    detect.set_defaults(handler=cmd_detect)

    thresholds = verbs.add_parser("thresholds", help="JIT attack thresholds for a pool snapshot")
    thresholds.add_argument("snapshot")
    thresholds.add_argument("--L", type=float, required=True, help="Bot liquidity units")
    thresholds.add_argument("--G", type=float, default=DEFAULT_GAS, help="Gas cost in token B")
    thresholds.add_argument("--gamma", type=float, default=None, help="Fee rate (defaults to the snapshot's)")
    thresholds.add_argument("--market-rate", type=float, default=None)
    thresholds.set_defaults(handler=cmd_thresholds)

    metrics = verbs.add_parser("metrics", help="Compare two liquidity vectors or series")
    metrics.add_argument("a")
    metrics.add_argument("b", help="Reference series")
    metrics.set_defaults(handler=cmd_metrics)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level, fmt=args.log_format, stream=sys.stderr)
    try:
        return args.handler(args)
    except LiquidityLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        capture_error(e, context={"cli": {"verb": args.verb}})
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
