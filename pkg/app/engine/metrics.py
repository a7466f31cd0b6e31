"""Distribution and fit metrics used by calibration and reports."""

import logging
from typing import Tuple

import numpy as np
from scipy.optimize import nnls
from scipy.stats import wasserstein_distance

from app.core.errors import InvalidInputError, UndefinedMetricError, ZeroMassError

logger = logging.getLogger(__name__)


def _liquidity_pair(f, g) -> Tuple[np.ndarray, np.ndarray]:
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape or f.ndim != 1:
        raise InvalidInputError(f"liquidity vectors differ in shape: {f.shape} vs {g.shape}")
    if np.any(f < 0) or np.any(g < 0):
        raise InvalidInputError("liquidity vectors must be non-negative")
    if f.sum() <= 0 or g.sum() <= 0:
        raise ZeroMassError("cannot compare a liquidity vector without mass")
    return f, g


def wasserstein1(f, g) -> float:
    """
    W1 between two liquidity vectors, in ticks.

    Both vectors are normalized to unit mass first; use ``mass_ratio`` for
    the difference in total liquidity.
    """
    f, g = _liquidity_pair(f, g)
    ticks = np.arange(1, f.size + 1, dtype=float)
    return float(wasserstein_distance(ticks, ticks, u_weights=f, v_weights=g))


def mass_ratio(f, g) -> float:
    f, g = _liquidity_pair(f, g)
    return float(f.sum() / g.sum())


def nnls_fit(rows: np.ndarray, target: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Non-negative weights x minimizing ||x^T rows - target||_2.

    Returns (x, residual norm).
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    target = np.asarray(target, dtype=float)
    if rows.shape[1] != target.size:
        raise InvalidInputError(f"rows have {rows.shape[1]} columns, target has {target.size}")
    if np.any(target < 0):
        raise InvalidInputError("target must be non-negative")
    weights, residual = nnls(rows.T, target)
    return weights, float(residual)


def r_score(f, g) -> float:
    """Coefficient of determination of ``f`` against the reference ``g``."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise InvalidInputError("r-score needs series of equal length")
    total = np.sum((g - g.mean()) ** 2)
    if total == 0:
        raise UndefinedMetricError("r-score undefined for a constant reference")
    return float(1.0 - np.sum((g - f) ** 2) / total)


def mape(a, b) -> float:
    """Mean absolute percentage error of ``a`` against ``b``, in percent."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size == 0:
        raise InvalidInputError("mape needs non-empty series of equal length")
    if np.any(b <= 0):
        raise InvalidInputError("mape reference must be strictly positive")
    return float(np.mean(np.abs(a - b) / np.abs(b)) * 100.0)


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(0.5 * np.sum(np.abs(p / p.sum() - q / q.sum())))
