"""
File ingestion and export.

Pool snapshot format (CSV with metadata comment lines)::

    # pool_rate=1.6
    # fee_rate=0.0005
    tick_index,price_lower,price_upper,liquidity
    0,1.00,1.21,70
    1,1.21,1.44,90
    ...

Tick indices may be 0-based (exported data) or 1-based; rows may come in
any order. Liquidity is in liquidity units, prices in token B per token A.
"""

import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.core.errors import InvalidInputError, SnapshotParseError
from app.engine.games import TypeDistribution
from app.engine.pool import PoolState, PriceGrid
from app.engine.stochastic import JointSwapDensity
from app.schemas.game import TYPE_DISTRIBUTION_VERSION, TypeDistributionFile
from app.schemas.scenario import ScenarioConfig, parse_scenario
from app.schemas.transaction import TransactionRecord

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SNAPSHOT_COLUMNS = ("tick_index", "price_lower", "price_upper", "liquidity")
HISTORY_COLUMNS = ("block", "signed_size_tokenB", "pool_rate_before", "market_rate_before")
RECORD_COLUMNS = ("block", "index", "account", "kind", "token_a", "token_b")
DENSITY_VERSION = 1
BLOCK_SECONDS = 12


# ==================== Helpers ====================

def _split_metadata(path: PathLike) -> Tuple[Dict[str, str], List[str], int]:
    """Metadata from leading ``# key=value`` lines, the remaining lines and the header's line number."""
    metadata: Dict[str, str] = {}
    lines = Path(path).read_text().splitlines()
    body_start = 0
    for number, line in enumerate(lines):
        stripped = line.strip()
        if not stripped:
            continue
        if not stripped.startswith("#"):
            body_start = number
            break
        entry = stripped.lstrip("#").strip()
        if "=" in entry:
            key, value = entry.split("=", 1)
            metadata[key.strip()] = value.strip()
    else:
        body_start = len(lines)
    return metadata, lines[body_start:], body_start + 1


def _read_table(path: PathLike, lines: List[str], header_line: int, columns, dtype: Optional[Dict[str, Any]] = None) -> pd.DataFrame:
    if not lines:
        raise SnapshotParseError(str(path), header_line, "no header row")
    frame = pd.read_csv(io.StringIO("\n".join(lines)), skipinitialspace=True, dtype=dtype)
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise SnapshotParseError(str(path), header_line, f"missing columns {missing}")
    # file line of each row
    frame["_line"] = header_line + 1 + np.arange(len(frame))
    return frame


def _numeric(path: PathLike, frame: pd.DataFrame, column: str, allow_missing: bool = False) -> pd.Series:
    values = pd.to_numeric(frame[column], errors="coerce")
    bad = values.isna() & (frame[column].notna() | (not allow_missing))
    if bad.any():
        row = frame.loc[bad.idxmax()]
        raise SnapshotParseError(str(path), int(row["_line"]), f"{column} is not a number: {row[column]!r}")
    return values


# ==================== Pool snapshots ====================

def load_pool_snapshot(path: PathLike) -> PoolState:
    """
    Parse a pool snapshot into a PoolState with 1-based ticks.

    Raises:
        SnapshotParseError: schema mismatch, gaps in the tick indices,
            non-monotone or non-contiguous price grid, negative liquidity
    """
    metadata, lines, header_line = _split_metadata(path)
    frame = _read_table(path, lines, header_line, SNAPSHOT_COLUMNS)
    if frame.empty:
        raise SnapshotParseError(str(path), header_line, "snapshot has no tick rows")

    ticks = _numeric(path, frame, "tick_index")
    lower = _numeric(path, frame, "price_lower")
    upper = _numeric(path, frame, "price_upper")
    liquidity = _numeric(path, frame, "liquidity", allow_missing=True)

    if liquidity.isna().all():
        logger.warning(f"Snapshot {path} has no liquidity values; loading an empty pool")
        liquidity = pd.Series(0.0, index=frame.index)
    elif liquidity.isna().any():
        row = frame.loc[liquidity.isna().idxmax()]
        raise SnapshotParseError(str(path), int(row["_line"]), "liquidity is missing")
    negative = liquidity < 0
    if negative.any():
        row = frame.loc[negative.idxmax()]
        raise SnapshotParseError(str(path), int(row["_line"]), f"negative liquidity {row['liquidity']}")

    table = pd.DataFrame({
        "tick": ticks.astype(int),
        "lower": lower,
        "upper": upper,
        "liquidity": liquidity.astype(float),
        "line": frame["_line"],
    }).sort_values("tick", kind="stable").reset_index(drop=True)

    first = int(table["tick"].iloc[0])
    if first not in (0, 1):
        raise SnapshotParseError(str(path), int(table["line"].iloc[0]), f"tick indices must start at 0 or 1, got {first}")
    expected = np.arange(first, first + len(table))
    gaps = table["tick"].to_numpy() != expected
    if gaps.any():
        row = table.loc[int(np.argmax(gaps))]
        raise SnapshotParseError(str(path), int(row["line"]), f"tick index {int(row['tick'])} breaks the sequence")

    lowers = table["lower"].to_numpy()
    uppers = table["upper"].to_numpy()
    for i in range(len(table)):
        if not 0 < lowers[i] < uppers[i]:
            raise SnapshotParseError(str(path), int(table["line"].iloc[i]), "non-monotone price grid")
        if i > 0 and not np.isclose(uppers[i - 1], lowers[i], rtol=1e-9, atol=0.0):
            raise SnapshotParseError(
                str(path), int(table["line"].iloc[i]), f"price_lower {lowers[i]} does not continue {uppers[i - 1]}"
            )

    if "pool_rate" not in metadata:
        raise SnapshotParseError(str(path), 1, "missing '# pool_rate=' metadata line")
    try:
        pool_rate = float(metadata["pool_rate"])
        fee_rate = float(metadata.get("fee_rate", 0.0))
    except ValueError as e:
        raise SnapshotParseError(str(path), 1, f"bad metadata value: {e}")

    grid = PriceGrid(np.append(lowers, uppers[-1]))
    state = PoolState(grid, table["liquidity"].to_numpy(), pool_rate, fee_rate)
    logger.info(f"Loaded snapshot {path}: {grid.d} ticks, pool rate {pool_rate}, active tick {state.active_tick}")
    return state


def write_pool_snapshot(state: PoolState, path: PathLike, zero_based: bool = True) -> Path:
    """Write ``state`` in the snapshot format; returns the path written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    offset = 0 if zero_based else 1
    frame = pd.DataFrame({
        "tick_index": np.arange(state.d) + offset,
        "price_lower": state.grid.points[:-1],
        "price_upper": state.grid.points[1:],
        "liquidity": state.liquidity,
    })
    with path.open("w") as handle:
        handle.write(f"# pool_rate={float(state.pool_rate)!r}\n")
        handle.write(f"# fee_rate={float(state.fee_rate)!r}\n")
        frame.to_csv(handle, index=False, float_format="%.17g")
    return path


# ==================== Swap history and market paths ====================

def load_swap_history(path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    """Signed token-B swap sizes and the arbitrage level p* - m* before each swap."""
    frame = _read_table(path, Path(path).read_text().splitlines(), 1, HISTORY_COLUMNS)
    sizes = _numeric(path, frame, "signed_size_tokenB").to_numpy(dtype=float)
    pool_rates = _numeric(path, frame, "pool_rate_before").to_numpy(dtype=float)
    market_rates = _numeric(path, frame, "market_rate_before").to_numpy(dtype=float)
    logger.info(f"Loaded {len(frame)} swaps from {path}")
    return sizes, pool_rates - market_rates


def step_interpolate(rates: np.ndarray, timestamps: Optional[np.ndarray], granularity_seconds: int, block_seconds: int = BLOCK_SECONDS) -> np.ndarray:
    """Per-block rates: each block takes the last observation at or before its time."""
    rates = np.asarray(rates, dtype=float)
    if timestamps is None:
        timestamps = np.arange(rates.size) * float(granularity_seconds)
    timestamps = np.asarray(timestamps, dtype=float)
    if np.any(np.diff(timestamps) <= 0):
        raise InvalidInputError("market path timestamps must be strictly increasing")
    end = timestamps[-1] + granularity_seconds
    block_times = np.arange(timestamps[0], end, block_seconds)
    index = np.searchsorted(timestamps, block_times, side="right") - 1
    return rates[index]


def load_market_path(path: PathLike, granularity_seconds: int = 60, block_seconds: int = BLOCK_SECONDS) -> np.ndarray:
    """
    Market rates per block from a ``market_rate`` column (optional ``timestamp`` in seconds).

    Observations are stepped forward to ``block_seconds`` resolution.
    """
    lines = Path(path).read_text().splitlines()
    frame = _read_table(path, lines, 1, ("market_rate",))
    rates = _numeric(path, frame, "market_rate").to_numpy(dtype=float)
    if rates.size == 0:
        raise SnapshotParseError(str(path), 1, "market path is empty")
    non_positive = rates <= 0
    if non_positive.any():
        raise SnapshotParseError(str(path), int(frame["_line"].iloc[int(np.argmax(non_positive))]), "market rate must be positive")
    timestamps = _numeric(path, frame, "timestamp").to_numpy(dtype=float) if "timestamp" in frame.columns else None
    series = step_interpolate(rates, timestamps, granularity_seconds, block_seconds)
    logger.info(f"Loaded {rates.size} market rates from {path}, {series.size} blocks")
    return series


# ==================== Transactions ====================

def load_transaction_records(path: PathLike) -> List[TransactionRecord]:
    """Transaction records from CSV, or from a JSON list when the file ends in .json."""
    path = Path(path)
    if path.suffix == ".json":
        rows = json.loads(path.read_text())
        records = []
        for number, row in enumerate(rows, start=1):
            try:
                records.append(TransactionRecord.model_validate(row))
            except ValidationError as e:
                raise SnapshotParseError(str(path), number, str(e.errors()[0]["msg"]))
        return records

    frame = _read_table(path, path.read_text().splitlines(), 1, RECORD_COLUMNS, dtype={"account": str, "kind": str})
    frame = frame.astype(object).where(frame.notna(), None)
    records = []
    for row in frame.to_dict(orient="records"):
        line = row.pop("_line")
        try:
            records.append(TransactionRecord.model_validate(row))
        except ValidationError as e:
            raise SnapshotParseError(str(path), int(line), str(e.errors()[0]["msg"]))
    logger.info(f"Loaded {len(records)} transaction records from {path}")
    return records


# ==================== Scenario and model files ====================

def load_scenario(path: PathLike) -> ScenarioConfig:
    """
    Parse a JSON scenario file.

    Relative file paths inside the scenario resolve against the scenario's directory.
    """
    path = Path(path)
    data: Dict[str, Any] = json.loads(path.read_text())
    config = parse_scenario(data)
    base = path.parent

    def resolve(value: Optional[str]) -> Optional[str]:
        if value is None or Path(value).is_absolute():
            return value
        return str(base / value)

    return config.model_copy(update={
        "pool_path": resolve(config.pool_path),
        "target_path": resolve(config.target_path),
        "type_distribution_path": resolve(config.type_distribution_path),
        "density": config.density.model_copy(update={
            "density_path": resolve(config.density.density_path),
            "history_path": resolve(config.density.history_path),
        }),
        "market": config.market.model_copy(update={"path": resolve(config.market.path)}),
    })


def export_type_distribution(distribution: TypeDistribution, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(TypeDistributionFile.from_distribution(distribution).model_dump_json(indent=2))
    return path


def load_type_distribution(path: PathLike) -> TypeDistribution:
    data = json.loads(Path(path).read_text())
    version = data.get("schema_version", TYPE_DISTRIBUTION_VERSION)
    if version != TYPE_DISTRIBUTION_VERSION:
        raise InvalidInputError(f"type distribution schema_version {version!r} is not supported")
    return TypeDistributionFile.model_validate(data).to_distribution()


def export_density(density: JointSwapDensity, path: PathLike) -> Path:
    """Fitted swap density with its grids and bandwidths."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"schema_version": DENSITY_VERSION, **density.to_dict()}))
    return path


def load_density(path: PathLike) -> JointSwapDensity:
    data = json.loads(Path(path).read_text())
    version = data.pop("schema_version", DENSITY_VERSION)
    if version != DENSITY_VERSION:
        raise InvalidInputError(f"density schema_version {version!r} is not supported")
    return JointSwapDensity.from_dict(data)


def load_series(path: PathLike) -> np.ndarray:
    """
    Numeric series from a pool snapshot (its liquidity) or a CSV file.

    CSV files use their ``liquidity`` column when present, otherwise the
    first column.
    """
    metadata, lines, header_line = _split_metadata(path)
    if "pool_rate" in metadata:
        return load_pool_snapshot(path).liquidity.copy()
    frame = _read_table(path, lines, header_line, ())
    column = "liquidity" if "liquidity" in frame.columns else frame.columns[0]
    return _numeric(path, frame, column).to_numpy(dtype=float)
