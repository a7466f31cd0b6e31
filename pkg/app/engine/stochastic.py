"""
Exogenous randomness of the simulation: swap arrivals, swap sizes and the
market exchange rate.

Swap sizes are modelled through a Gaussian kernel density over
(arbitrage level, signed log size) evaluated once on a rectangular grid;
sampling slices the grid at the nearest arbitrage line and inverts the
slice's CDF. Market rates follow a geometric Brownian motion whose drift is
shifted by the LP's trend belief.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Any, Optional, Tuple

import numpy as np
from scipy import stats
from scipy.cluster.vq import kmeans2
from scipy.integrate import trapezoid
from scipy.interpolate import RegularGridInterpolator
from scipy.special import expit

from app.core.errors import DensityFitError, InvalidInputError

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 256
GRID_MARGIN_BANDWIDTHS = 3.0


# ==================== Arrivals ====================

@dataclass(frozen=True)
class ArrivalModel:
    """rho(x) = 1 / (1 + exp(-scale * |x| + offset))"""

    scale: float = 0.01145
    offset: float = 0.6169

    def __post_init__(self):
        if not np.isfinite(self.scale) or self.scale < 0:
            raise InvalidInputError("arrival scale must be finite and non-negative")
        if np.isnan(self.offset):
            raise InvalidInputError("arrival offset must not be NaN")

    @classmethod
    def from_linear_fit(cls, slope: float = 0.0026, intercept: float = 0.3505) -> "ArrivalModel":
        """Sigmoid with rho(0) = intercept and rho'(0+) = slope."""
        if not 0.0 < intercept < 1.0:
            raise InvalidInputError(f"intercept {intercept!r} is not a probability")
        scale = slope / (intercept * (1.0 - intercept))
        return cls(scale=max(float(scale), 0.0), offset=float(np.log(1.0 / intercept - 1.0)))

    @classmethod
    def always(cls) -> "ArrivalModel":
        return cls(scale=0.0, offset=-np.inf)

    @classmethod
    def never(cls) -> "ArrivalModel":
        return cls(scale=0.0, offset=np.inf)

    def probability(self, arbitrage):
        x = np.abs(np.asarray(arbitrage, dtype=float))
        if np.isinf(self.offset):
            p = np.full(x.shape, 0.0 if self.offset > 0 else 1.0)
        else:
            p = expit(self.scale * x - self.offset)
        return float(p) if p.ndim == 0 else p


def arrival_prob(model: ArrivalModel, arbitrage):
    return model.probability(arbitrage)


def sample_arrival(model: ArrivalModel, arbitrage, rng: np.random.Generator):
    """Bernoulli(rho(arbitrage)) draws, one per arbitrage value."""
    p = np.asarray(model.probability(arbitrage))
    draws = (rng.random(p.shape) < p).astype(np.int8)
    return int(draws) if draws.ndim == 0 else draws


def fit_arrival_model(arbitrage: np.ndarray, arrived: np.ndarray, bins: int = 20) -> ArrivalModel:
    """
    Calibrate the arrival sigmoid from per-block observations.

    |arbitrage| is binned, the swap frequency of each bin is regressed
    linearly on the bin centre and the sigmoid matching that line at zero
    is returned.
    """
    arbitrage = np.abs(np.asarray(arbitrage, dtype=float))
    arrived = np.asarray(arrived, dtype=float)
    if arbitrage.shape != arrived.shape or arbitrage.size < 2:
        raise InvalidInputError("arrival fit needs two aligned series of length >= 2")
    edges = np.histogram_bin_edges(arbitrage, bins=bins)
    which = np.clip(np.digitize(arbitrage, edges[1:-1]), 0, bins - 1)
    counts = np.bincount(which, minlength=bins)
    hits = np.bincount(which, weights=arrived, minlength=bins)
    filled = counts > 0
    if filled.sum() < 2:
        raise DensityFitError("arrival fit needs at least two populated bins")
    centres = 0.5 * (edges[:-1] + edges[1:])
    fit = stats.linregress(centres[filled], hits[filled] / counts[filled])
    logger.info(f"Arrival fit: slope={fit.slope:.6g}, intercept={fit.intercept:.6g}, r={fit.rvalue:.3f}")
    return ArrivalModel.from_linear_fit(float(fit.slope), float(fit.intercept))


# ==================== Swap sizes ====================

def encode_sizes(sizes):
    """Signed log size: sign(s) * log10(1 + |s|); the shift keeps |s| < 1 on its own side of zero."""
    sizes = np.asarray(sizes, dtype=float)
    return np.sign(sizes) * np.log10(1.0 + np.abs(sizes))


def decode_sizes(encoded):
    encoded = np.asarray(encoded, dtype=float)
    return np.sign(encoded) * (np.power(10.0, np.abs(encoded)) - 1.0)


@dataclass(frozen=True, eq=False)
class JointSwapDensity:
    """
    Joint density of (arbitrage level, signed log size) tabulated on a grid.

    ``density`` has one row per arbitrage grid line and one column per size
    grid line. ``sizes`` holds the decoded token-B size of every column.
    """

    arbitrage_grid: np.ndarray
    size_grid: np.ndarray
    density: np.ndarray
    bandwidth: np.ndarray
    sizes: Optional[np.ndarray] = None
    n_samples: int = 0
    _cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        arbitrage_grid = np.array(self.arbitrage_grid, dtype=float).reshape(-1)
        size_grid = np.array(self.size_grid, dtype=float).reshape(-1)
        density = np.array(self.density, dtype=float).reshape(arbitrage_grid.size, size_grid.size)
        if np.any(density < 0) or not np.all(np.isfinite(density)):
            raise DensityFitError("density values must be finite and non-negative")
        if density.sum() <= 0:
            raise DensityFitError("density has no mass on its grid")
        sizes = decode_sizes(size_grid) if self.sizes is None else np.array(self.sizes, dtype=float)

        weights = density.copy()
        empty = weights.sum(axis=1) <= 0
        if np.any(empty):
            weights[empty] = density.sum(axis=0)
        cdf = np.cumsum(weights, axis=1)
        cdf /= cdf[:, -1:]
        cdf[:, -1] = 1.0

        for name, value in (
            ("arbitrage_grid", arbitrage_grid),
            ("size_grid", size_grid),
            ("density", density),
            ("sizes", sizes),
            ("bandwidth", np.array(self.bandwidth, dtype=float)),
            ("_cdf", cdf),
        ):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def point_mass(cls, size: float, arbitrage: float = 0.0) -> "JointSwapDensity":
        """Degenerate model that always returns ``size``."""
        return cls(
            arbitrage_grid=np.array([arbitrage]),
            size_grid=encode_sizes(np.array([size])),
            density=np.ones((1, 1)),
            bandwidth=np.zeros(2),
            sizes=np.array([float(size)]),
        )

    @property
    def is_point_mass(self) -> bool:
        return self.density.size == 1

    def integral(self) -> float:
        if self.is_point_mass:
            return 1.0
        return float(trapezoid(trapezoid(self.density, self.size_grid, axis=1), self.arbitrage_grid))

    def pdf(self, arbitrage, log_size):
        """Density at (arbitrage, log_size), zero outside the grid."""
        if self.is_point_mass:
            raise InvalidInputError("a point mass has no density")
        interpolator = RegularGridInterpolator(
            (self.arbitrage_grid, self.size_grid), self.density, bounds_error=False, fill_value=0.0
        )
        points = np.stack(np.broadcast_arrays(np.asarray(arbitrage, float), np.asarray(log_size, float)), axis=-1)
        return interpolator(points)

    def marginal_log_size(self) -> np.ndarray:
        """Marginal density over ``size_grid``, normalized on the grid."""
        if self.is_point_mass:
            return np.ones(1)
        marginal = trapezoid(self.density, self.arbitrage_grid, axis=0)
        return marginal / trapezoid(marginal, self.size_grid)

    def conditional(self, arbitrage: float) -> np.ndarray:
        """Size density of the slice nearest to ``arbitrage``, normalized on the grid."""
        row = int(self.rows_for(np.array([arbitrage]))[0][0])
        slice_ = self.density[row]
        if self.is_point_mass:
            return np.ones(1)
        if slice_.sum() <= 0:
            slice_ = self.density.sum(axis=0)
        return slice_ / trapezoid(slice_, self.size_grid)

    def conditional_mean(self, arbitrage: float) -> float:
        """Mean token-B size under the sampler at ``arbitrage``."""
        row = int(self.rows_for(np.array([arbitrage]))[0][0])
        probabilities = np.diff(self._cdf[row], prepend=0.0)
        return float(np.dot(probabilities, self.sizes))

    def rows_for(self, arbitrage: np.ndarray) -> Tuple[np.ndarray, int]:
        """Nearest arbitrage row per value and the number of values clamped to the grid."""
        arbitrage = np.asarray(arbitrage, dtype=float)
        grid = self.arbitrage_grid
        if grid.size == 1:
            return np.zeros(arbitrage.shape, dtype=np.intp), 0
        clamped = int(np.count_nonzero((arbitrage < grid[0]) | (arbitrage > grid[-1])))
        step = grid[1] - grid[0]
        rows = np.rint((arbitrage - grid[0]) / step)
        return np.clip(rows, 0, grid.size - 1).astype(np.intp), clamped

    def quantile(self, arbitrage, uniforms) -> Tuple[np.ndarray, int]:
        """
        Inverse-CDF sizes for uniforms in [0, 1) at the given arbitrage levels.

        All slices are searched in one call: row r's CDF is shifted by 2r so the
        flattened table stays sorted.
        """
        uniforms = np.asarray(uniforms, dtype=float)
        rows, clamped = self.rows_for(np.broadcast_to(arbitrage, uniforms.shape))
        n_cols = self.size_grid.size
        shifted = (self._cdf + 2.0 * np.arange(self._cdf.shape[0])[:, None]).ravel()
        flat = np.searchsorted(shifted, uniforms + 2.0 * rows, side="right")
        cols = np.clip(flat - rows * n_cols, 0, n_cols - 1)
        return self.sizes[cols], clamped

    def to_dict(self) -> Dict[str, Any]:
        return {
            "arbitrage_grid": self.arbitrage_grid.tolist(),
            "size_grid": self.size_grid.tolist(),
            "density": self.density.tolist(),
            "bandwidth": self.bandwidth.tolist(),
            "sizes": self.sizes.tolist(),
            "n_samples": self.n_samples,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "JointSwapDensity":
        return cls(
            arbitrage_grid=np.asarray(data["arbitrage_grid"]),
            size_grid=np.asarray(data["size_grid"]),
            density=np.asarray(data["density"]),
            bandwidth=np.asarray(data["bandwidth"]),
            sizes=np.asarray(data["sizes"]) if data.get("sizes") is not None else None,
            n_samples=int(data.get("n_samples", 0)),
        )


def fit_joint_density(
    log_sizes: np.ndarray,
    arbitrage: np.ndarray,
    grid_size: int = DEFAULT_GRID_SIZE,
    bw_method: Any = "scott",
) -> JointSwapDensity:
    """
    Gaussian KDE of (arbitrage, signed log size) pairs tabulated on a grid.

    The grid spans the sample range widened by three bandwidths on every
    side and the tabulated density is renormalized to integrate to one.

    Raises:
        DensityFitError: fewer than three samples or no spread in a dimension
    """
    log_sizes = np.asarray(log_sizes, dtype=float)
    arbitrage = np.asarray(arbitrage, dtype=float)
    if log_sizes.shape != arbitrage.shape or log_sizes.ndim != 1:
        raise InvalidInputError("log sizes and arbitrage must be aligned 1-d series")
    keep = np.isfinite(log_sizes) & np.isfinite(arbitrage)
    log_sizes, arbitrage = log_sizes[keep], arbitrage[keep]
    if log_sizes.size < 3:
        raise DensityFitError(f"need at least 3 samples, got {log_sizes.size}")
    if np.ptp(log_sizes) == 0 or np.ptp(arbitrage) == 0:
        raise DensityFitError("samples have no spread in one dimension")

    data = np.vstack([arbitrage, log_sizes])
    try:
        kde = stats.gaussian_kde(data, bw_method=bw_method)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise DensityFitError(f"kernel density fit failed: {e}") from e

    bandwidth = np.sqrt(np.diag(kde.covariance))
    axes = [
        np.linspace(row.min() - GRID_MARGIN_BANDWIDTHS * bw, row.max() + GRID_MARGIN_BANDWIDTHS * bw, grid_size)
        for row, bw in zip(data, bandwidth)
    ]
    mesh_a, mesh_s = np.meshgrid(axes[0], axes[1], indexing="ij")
    values = kde(np.vstack([mesh_a.ravel(), mesh_s.ravel()])).reshape(grid_size, grid_size)
    values /= trapezoid(trapezoid(values, axes[1], axis=1), axes[0])

    logger.info(
        f"Fitted swap density on {log_sizes.size} samples, "
        f"bandwidth arbitrage={bandwidth[0]:.4g} log-size={bandwidth[1]:.4g}"
    )
    return JointSwapDensity(
        arbitrage_grid=axes[0],
        size_grid=axes[1],
        density=values,
        bandwidth=bandwidth,
        n_samples=int(log_sizes.size),
    )


def fit_swap_density(sizes: np.ndarray, arbitrage: np.ndarray, **kwargs) -> JointSwapDensity:
    """fit_joint_density on raw token-B sizes; zero-size swaps are dropped."""
    sizes = np.asarray(sizes, dtype=float)
    arbitrage = np.asarray(arbitrage, dtype=float)
    nonzero = sizes != 0
    return fit_joint_density(encode_sizes(sizes[nonzero]), arbitrage[nonzero], **kwargs)


def sample_swap_size(density: JointSwapDensity, arbitrage, rng: np.random.Generator):
    """Signed token-B swap size(s) drawn from the conditional slice at ``arbitrage``."""
    arbitrage = np.asarray(arbitrage, dtype=float)
    sizes, clamped = density.quantile(arbitrage, rng.random(arbitrage.shape))
    if clamped:
        logger.warning(f"{clamped} arbitrage value(s) outside the density grid clamped to its edge")
    return float(sizes) if sizes.ndim == 0 else sizes


def synthetic_swap_history(
    n: int,
    rng: np.random.Generator,
    arbitrage_scale: float = 1.0,
    small_size: float = 1e2,
    large_size: float = 1e4,
    spread: float = 0.35,
    large_share: float = 0.3,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bimodal swap history for runs without a history file.

    Returns (signed token-B sizes, arbitrage levels). Positive arbitrage
    (pool rate above market) makes withdrawals of token B more likely, so
    size and arbitrage are negatively correlated.
    """
    arbitrage = rng.normal(0.0, arbitrage_scale, size=n)
    large = rng.random(n) < large_share
    centre = np.where(large, np.log10(large_size), np.log10(small_size))
    magnitude = np.power(10.0, rng.normal(centre, spread))
    buy_b = rng.random(n) < expit(-2.0 * arbitrage / arbitrage_scale)
    return np.where(buy_b, magnitude, -magnitude), arbitrage


# ==================== Market rate ====================

@dataclass(frozen=True)
class MarketModel:
    """GBM with drift alpha + belief * belief_scale per second."""

    drift: float = 0.0
    volatility: float = 0.00106
    belief: int = 0
    dt: float = 12.0
    belief_scale: float = 1e-3

    def __post_init__(self):
        if self.volatility < 0:
            raise InvalidInputError("volatility must be non-negative")
        if self.belief not in (-1, 0, 1):
            raise InvalidInputError(f"belief {self.belief!r} not in {{-1, 0, 1}}")
        if self.dt <= 0:
            raise InvalidInputError("time step must be positive")

    def with_belief(self, belief: int) -> "MarketModel":
        return MarketModel(self.drift, self.volatility, belief, self.dt, self.belief_scale)

    @property
    def log_drift(self) -> float:
        return (self.drift + self.belief * self.belief_scale - self.volatility ** 2) * self.dt

    def advance(self, prev, normals):
        """One step from standard normal draws."""
        return prev * np.exp(self.log_drift + self.volatility * np.sqrt(self.dt) * np.asarray(normals))


def market_step(model: MarketModel, prev: float, rng: np.random.Generator) -> float:
    if prev <= 0:
        raise InvalidInputError("market rate must be positive")
    return float(model.advance(prev, rng.standard_normal()))


def market_path(model: MarketModel, start: float, horizon: int, rng: np.random.Generator, n_paths: Optional[int] = None) -> np.ndarray:
    """Rates m_0..m_T, shape (T+1,) or (T+1, n_paths)."""
    if start <= 0:
        raise InvalidInputError("market rate must be positive")
    shape = (horizon,) if n_paths is None else (horizon, n_paths)
    increments = model.log_drift + model.volatility * np.sqrt(model.dt) * rng.standard_normal(shape)
    zero = np.zeros((1,) + shape[1:])
    return start * np.exp(np.concatenate([zero, np.cumsum(increments, axis=0)]))


# ==================== Capital clusters ====================

@dataclass(frozen=True, eq=False)
class CapitalClusters:
    capitals: np.ndarray
    weights: np.ndarray
    counts: np.ndarray


def cluster_capitals(contributions: np.ndarray, n_clusters: int = 3, seed: int = 0) -> CapitalClusters:
    """
    Representative LP capitals from observed liquidity contributions.

    k-means on log10 capital; each cluster is represented by the mode of a
    KDE over its members and weighted by its share of contributions.
    """
    values = np.asarray(contributions, dtype=float)
    values = values[np.isfinite(values) & (values > 0)]
    if values.size < n_clusters:
        raise InvalidInputError(f"need at least {n_clusters} positive contributions")
    logs = np.log10(values)
    _, labels = kmeans2(logs, n_clusters, minit="++", seed=np.random.default_rng(seed))

    capitals, counts = [], []
    for label in range(n_clusters):
        members = logs[labels == label]
        if members.size == 0:
            logger.warning(f"Capital cluster {label} is empty, dropped")
            continue
        if members.size < 3 or np.ptp(members) == 0:
            mode = float(np.median(members))
        else:
            grid = np.linspace(members.min(), members.max(), 512)
            mode = float(grid[np.argmax(stats.gaussian_kde(members)(grid))])
        capitals.append(10.0 ** mode)
        counts.append(members.size)

    order = np.argsort(capitals)
    capitals = np.asarray(capitals)[order]
    counts = np.asarray(counts)[order]
    return CapitalClusters(capitals=capitals, weights=counts / counts.sum(), counts=counts)
