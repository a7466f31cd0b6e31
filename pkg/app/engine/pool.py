"""
Concentrated-liquidity constant-product pool.

A pool is a grid of exchange rates p_1 < ... < p_{d+1} (token B per token A)
splitting the price axis into d ticks, a liquidity level per tick and the
current pool rate p*. Only the active tick holds both tokens.

Ticks are 1-based in every public signature; arrays are 0-based. All state
objects are immutable and every operation returns a new value.

Internally everything is expressed in square-root prices. With
s_i = sqrt(p_i) and c_i(s) = clip(s, s_i, s_{i+1}):

    B_i(s) = l_i * (c_i(s) - s_i)
    A_i(s) = l_i * (1 / c_i(s) - 1 / s_{i+1})

so the pool's cumulative token B, F(s) = sum_i B_i(s), is piecewise linear
and non-decreasing in s. A swap of x token B moves the pool from s to the
root of F(s') = F(s) + x; the helpers at the bottom of this module do that
inversion on arrays so the Monte-Carlo kernel can run many pools at once.
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from app.core.errors import (
    DegeneratePositionError,
    InvalidInputError,
    OutOfRangeError,
    PartialFillError,
)

logger = logging.getLogger(__name__)


# ==================== Domain Types ====================

@dataclass(frozen=True, eq=False)
class PriceGrid:
    """Tick boundaries p_1..p_{d+1}, strictly increasing and positive."""

    points: np.ndarray
    sqrt_points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim != 1 or points.size < 2:
            raise InvalidInputError("price grid needs at least two boundaries")
        if not np.all(np.isfinite(points)) or np.any(points <= 0):
            raise InvalidInputError("price grid boundaries must be finite and positive")
        if np.any(np.diff(points) <= 0):
            raise InvalidInputError("price grid must be strictly increasing")
        points.setflags(write=False)
        sqrt_points = np.sqrt(points)
        sqrt_points.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "sqrt_points", sqrt_points)

    @property
    def d(self) -> int:
        """Number of ticks."""
        return self.points.size - 1

    @property
    def lower(self) -> float:
        return float(self.points[0])

    @property
    def upper(self) -> float:
        return float(self.points[-1])

    def check_tick(self, tick: int) -> int:
        """Validate a 1-based tick index and return its 0-based offset."""
        if not 1 <= int(tick) <= self.d:
            raise InvalidInputError(f"tick {tick} outside [1, {self.d}]")
        return int(tick) - 1


@dataclass(frozen=True, eq=False)
class PoolState:
    """
    Full CPMM state: grid, per-tick liquidity, pool rate p* and fee rate.

    ``pool_rate`` may equal the top boundary p_{d+1}, the state a swap
    leaves behind when it drains the top tick.
    """

    grid: PriceGrid
    liquidity: np.ndarray
    pool_rate: float
    fee_rate: float = 0.0

    def __post_init__(self):
        liquidity = np.array(self.liquidity, dtype=float)
        if liquidity.shape != (self.grid.d,):
            raise InvalidInputError(
                f"liquidity has shape {liquidity.shape}, grid has {self.grid.d} ticks"
            )
        if not np.all(np.isfinite(liquidity)) or np.any(liquidity < 0):
            raise InvalidInputError("liquidity must be finite and non-negative")
        if not 0.0 <= float(self.fee_rate) < 1.0:
            raise InvalidInputError(f"fee rate {self.fee_rate!r} outside [0, 1)")
        rate = float(self.pool_rate)
        if not self.grid.lower <= rate <= self.grid.upper:
            raise OutOfRangeError(rate, self.grid.lower, self.grid.upper)
        liquidity.setflags(write=False)
        object.__setattr__(self, "liquidity", liquidity)
        object.__setattr__(self, "pool_rate", rate)
        object.__setattr__(self, "fee_rate", float(self.fee_rate))

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def sqrt_rate(self) -> float:
        return float(np.sqrt(self.pool_rate))

    @property
    def active_tick(self) -> int:
        return active_tick(self.grid, self.pool_rate)

    def reserves(self) -> Tuple[np.ndarray, np.ndarray]:
        """Token A and token B held by every tick at the current rate."""
        return reserves_at(self.grid, self.liquidity, self.pool_rate)

    def with_liquidity(self, liquidity: np.ndarray) -> "PoolState":
        return PoolState(self.grid, liquidity, self.pool_rate, self.fee_rate)

    def with_fee_rate(self, fee_rate: float) -> "PoolState":
        return PoolState(self.grid, self.liquidity, self.pool_rate, fee_rate)

    def with_rate(self, rate: float) -> "PoolState":
        return PoolState(self.grid, self.liquidity, rate, self.fee_rate)


@dataclass(frozen=True)
class LiquidityPosition:
    """u units of liquidity on every tick from ``lower`` to ``upper - 1``."""

    lower: int
    upper: int
    units_per_tick: float = 0.0

    def __post_init__(self):
        if int(self.lower) < 1 or int(self.lower) >= int(self.upper):
            raise InvalidInputError(
                f"position ({self.lower}, {self.upper}) needs 1 <= lower < upper"
            )
        if not np.isfinite(self.units_per_tick) or self.units_per_tick < 0:
            raise InvalidInputError("units per tick must be finite and non-negative")

    @property
    def action(self) -> Tuple[int, int]:
        return (int(self.lower), int(self.upper))

    def covers(self, tick: int) -> bool:
        return self.lower <= tick < self.upper

    def check_grid(self, grid: PriceGrid):
        if self.upper > grid.d + 1:
            raise InvalidInputError(
                f"position upper bound {self.upper} beyond grid with {grid.d} ticks"
            )

    def expand(self, d: int) -> np.ndarray:
        """Per-tick liquidity vector of length d."""
        vector = np.zeros(d)
        vector[self.lower - 1:self.upper - 1] = self.units_per_tick
        return vector


@dataclass(frozen=True, eq=False)
class SwapOutcome:
    """Result of one swap; token_a_delta is the token A received by the swapper."""

    token_a_delta: float
    new_pool_rate: float
    new_active_tick: int
    fees_per_tick: np.ndarray
    token_b_delta: float
    token_b_per_tick: np.ndarray

    @property
    def total_fees(self) -> float:
        return float(np.sum(self.fees_per_tick))

    def apply(self, state: PoolState) -> PoolState:
        """State after the swap; liquidity is untouched."""
        return state.with_rate(self.new_pool_rate)


# ==================== Operations ====================

def active_tick(grid: PriceGrid, rate: float) -> int:
    """
    Index i* = max{i : p_i < rate}, with rate = p_1 mapped to tick 1.

    A rate equal to p_{d+1} (top tick exhausted by a swap) maps to tick d.

    Raises:
        OutOfRangeError: rate outside [p_1, p_{d+1}]
    """
    rate = float(rate)
    if not grid.lower <= rate <= grid.upper:
        raise OutOfRangeError(rate, grid.lower, grid.upper)
    return max(1, int(np.searchsorted(grid.points, rate, side="left")))


def reserves_at(grid: PriceGrid, liquidity: np.ndarray, rate: float) -> Tuple[np.ndarray, np.ndarray]:
    """Per-tick (A, B) reserves for a liquidity vector at a given rate."""
    sp = grid.sqrt_points
    clipped = clipped_sqrt(sp, np.sqrt(rate))
    liquidity = np.asarray(liquidity, dtype=float)
    token_a = liquidity * (1.0 / clipped - 1.0 / sp[1:])
    token_b = liquidity * (clipped - sp[:-1])
    return token_a, token_b


def tokens_from_liquidity(liquidity: float, tick: int, grid: PriceGrid, pool_rate: float) -> Tuple[float, float]:
    """
    Token A and token B backing ``liquidity`` units in ``tick``.

    Below the active tick only token B is held, above it only token A, and
    the active tick splits at the pool rate.
    """
    offset = grid.check_tick(tick)
    if liquidity < 0:
        raise InvalidInputError("liquidity must be non-negative")
    sp = grid.sqrt_points
    clipped = float(np.clip(np.sqrt(pool_rate), sp[offset], sp[offset + 1]))
    token_a = liquidity * (1.0 / clipped - 1.0 / sp[offset + 1])
    token_b = liquidity * (clipped - sp[offset])
    return float(token_a), float(token_b)


def unit_token_requirements(lower: int, upper: int, grid: PriceGrid, pool_rate: float) -> Tuple[np.ndarray, np.ndarray]:
    """Token A and token B needed per unit of liquidity on ticks lower..upper-1."""
    LiquidityPosition(lower, upper).check_grid(grid)
    sp = grid.sqrt_points
    clipped = clipped_sqrt(sp, np.sqrt(pool_rate))[lower - 1:upper - 1]
    token_a = 1.0 / clipped - 1.0 / sp[lower:upper]
    token_b = clipped - sp[lower - 1:upper - 1]
    return token_a, token_b


def unit_position_cost(lower: int, upper: int, market_rate: float, grid: PriceGrid, pool_rate: float) -> float:
    """Value in token B (token A priced at ``market_rate``) of one unit on [lower, upper)."""
    token_a, token_b = unit_token_requirements(lower, upper, grid, pool_rate)
    return float(np.sum(token_b + market_rate * token_a))


def liquidity_per_tick(
    lower: int,
    upper: int,
    capital: float,
    market_rate: float,
    grid: PriceGrid,
    pool_rate: float,
) -> float:
    """
    Units u an LP with ``capital`` token B can add on every tick of [lower, upper).

    When the range contains the active tick this is
    k / (sqrt(p*) - sqrt(p_lower) + m* (1/sqrt(p*) - 1/sqrt(p_upper))).
    Ranges entirely above or below the active tick are priced from their
    actual one-sided token requirement.

    Raises:
        DegeneratePositionError: unit cost not positive
    """
    if capital < 0:
        raise InvalidInputError("capital must be non-negative")
    if market_rate <= 0:
        raise DegeneratePositionError(f"market rate {market_rate!r} must be positive")
    cost = unit_position_cost(lower, upper, market_rate, grid, pool_rate)
    if not cost > 0:
        raise DegeneratePositionError(f"position ({lower}, {upper}) has unit cost {cost!r}")
    return float(capital) / cost


def position_tokens(position: LiquidityPosition, grid: PriceGrid, pool_rate: float) -> Tuple[float, float]:
    """Total token A and token B deposited by ``position``."""
    token_a, token_b = unit_token_requirements(position.lower, position.upper, grid, pool_rate)
    u = position.units_per_tick
    return float(u * np.sum(token_a)), float(u * np.sum(token_b))


def add_liquidity(state: PoolState, position: LiquidityPosition) -> PoolState:
    """Pool with ``position`` added; the pool rate is left unchanged."""
    position.check_grid(state.grid)
    if position.units_per_tick == 0:
        return state
    return state.with_liquidity(state.liquidity + position.expand(state.d))


def swap_boundaries(state: PoolState) -> np.ndarray:
    """
    Signed token-B breakpoints beta_1..beta_{d+1} of the swap function.

    beta_i is the swap size that moves the pool rate exactly to p_i:
    negative below the active tick (token B withdrawable), positive above
    it (token B depositable). beta_1 and beta_{d+1} bound the executable
    swaps.
    """
    sp = state.grid.sqrt_points
    cum = cumulative_token_b_grid(sp, state.liquidity)
    return cum - cumulative_token_b(sp, state.liquidity, state.sqrt_rate)


def execute_swap(state: PoolState, x: float, allow_partial: bool = False) -> SwapOutcome:
    """
    Execute a swap of ``x`` token B (x > 0 deposits B, x < 0 withdraws B).

    The swapper receives token_a_delta = psi(x) token A (negative when it
    pays token A). Fees gamma * |dB_i| are charged on top of the input and
    reported per tick; they never enter the reserves.

    Raises:
        PartialFillError: |x| beyond the pool's capacity, unless
            ``allow_partial`` clamps the swap to the executable amount.
    """
    x = float(x)
    grid = state.grid
    d = grid.d
    if x == 0.0:
        return _idle_outcome(state)

    sp = grid.sqrt_points
    cum = cumulative_token_b_grid(sp, state.liquidity)
    start = cumulative_token_b(sp, state.liquidity, state.sqrt_rate)
    floor, ceiling = -float(start), float(cum[-1] - start)
    if x > ceiling or x < floor:
        limit = ceiling if x > 0 else floor
        if not allow_partial:
            raise PartialFillError(x, limit)
        logger.debug(f"Swap of {x} clamped to {limit}")
        x = limit
        if x == 0.0:
            return _idle_outcome(state)

    target = float(np.clip(start + x, 0.0, cum[-1]))
    new_sqrt = float(solve_sqrt_rate(sp, state.liquidity, cum, np.array(target), np.array(x > 0)))
    new_sqrt = float(np.clip(new_sqrt, sp[0], sp[-1]))

    before = clipped_sqrt(sp, state.sqrt_rate)
    after = clipped_sqrt(sp, new_sqrt)
    token_b_per_tick = state.liquidity * (after - before)
    token_a = float(np.sum(state.liquidity * (1.0 / before - 1.0 / after)))
    fees = state.fee_rate * np.abs(token_b_per_tick)

    new_rate = float(np.clip(new_sqrt * new_sqrt, grid.lower, grid.upper))
    return SwapOutcome(
        token_a_delta=token_a,
        new_pool_rate=new_rate,
        new_active_tick=active_tick(grid, new_rate),
        fees_per_tick=fees,
        token_b_delta=x,
        token_b_per_tick=token_b_per_tick,
    )


def unit_fee_volume(state: PoolState, outcome: SwapOutcome) -> np.ndarray:
    """
    Fees earned per unit of liquidity on every tick by ``outcome``.

    phi_i / l_i = gamma * |dB_i| / l_i, zero on ticks without liquidity.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        per_unit = np.where(state.liquidity > 0, outcome.fees_per_tick / state.liquidity, 0.0)
    return per_unit


def swap_curve(state: PoolState, sizes: np.ndarray) -> np.ndarray:
    """psi evaluated on an array of swap sizes, all within capacity."""
    sizes = np.asarray(sizes, dtype=float)
    sp = state.grid.sqrt_points
    cum = cumulative_token_b_grid(sp, state.liquidity)
    start = cumulative_token_b(sp, state.liquidity, state.sqrt_rate)
    floor, ceiling = -float(start), float(cum[-1] - start)
    outside = (sizes > ceiling) | (sizes < floor)
    if np.any(outside):
        worst = sizes[outside][0]
        raise PartialFillError(float(worst), ceiling if worst > 0 else floor)
    target = np.clip(start + sizes, 0.0, cum[-1])
    new_sqrt = solve_sqrt_rate(sp, state.liquidity, cum, target, sizes > 0)
    new_sqrt = np.where(sizes == 0, state.sqrt_rate, new_sqrt)
    before = clipped_sqrt(sp, state.sqrt_rate)
    after = clipped_sqrt(sp, new_sqrt)
    return np.sum(state.liquidity * (1.0 / before - 1.0 / after), axis=-1)


def fee_share(position: LiquidityPosition, state: PoolState, tick: int) -> float:
    """Share u / (l_i + u) of tick ``tick`` fees owned by ``position``."""
    offset = state.grid.check_tick(tick)
    if not position.covers(tick):
        return 0.0
    total = state.liquidity[offset] + position.units_per_tick
    if total == 0:
        return 0.0
    return float(position.units_per_tick / total)


def rate_from_reserves(token_a: float, token_b: float, liquidity: float, tick: int, grid: PriceGrid) -> float:
    """Pool rate implied by the active tick's reserves."""
    offset = grid.check_tick(tick)
    sp = grid.sqrt_points
    return float((token_b + liquidity * sp[offset]) / (token_a + liquidity / sp[offset + 1]))


def _idle_outcome(state: PoolState) -> SwapOutcome:
    zeros = np.zeros(state.d)
    return SwapOutcome(
        token_a_delta=0.0,
        new_pool_rate=state.pool_rate,
        new_active_tick=state.active_tick,
        fees_per_tick=zeros,
        token_b_delta=0.0,
        token_b_per_tick=zeros.copy(),
    )


# ==================== Array helpers ====================
# Shapes: sqrt_points (d+1,), liquidity (..., d), sqrt rates (...).

def clipped_sqrt(sqrt_points: np.ndarray, s) -> np.ndarray:
    """clip(s, s_i, s_{i+1}) for every tick, shape (..., d)."""
    s = np.asarray(s, dtype=float)[..., None]
    return np.clip(s, sqrt_points[:-1], sqrt_points[1:])


def cumulative_token_b(sqrt_points: np.ndarray, liquidity: np.ndarray, s) -> np.ndarray:
    """F(s): token B held by the whole pool at sqrt rate s."""
    return np.sum(liquidity * (clipped_sqrt(sqrt_points, s) - sqrt_points[:-1]), axis=-1)


def cumulative_token_b_grid(sqrt_points: np.ndarray, liquidity: np.ndarray) -> np.ndarray:
    """F evaluated on every grid point, shape (..., d+1), starting at 0."""
    capacity = np.asarray(liquidity, dtype=float) * np.diff(sqrt_points)
    zeros = np.zeros(capacity.shape[:-1] + (1,))
    return np.concatenate([zeros, np.cumsum(capacity, axis=-1)], axis=-1)


def solve_sqrt_rate(
    sqrt_points: np.ndarray,
    liquidity: np.ndarray,
    cum_grid: np.ndarray,
    target: np.ndarray,
    upward: np.ndarray,
) -> np.ndarray:
    """
    Sqrt rate where F reaches ``target``.

    Upward moves take the smallest root and downward moves the largest, so
    ticks without liquidity are crossed without filling anything. ``target``
    must already lie in [0, F(s_{d+1})].
    """
    target = np.asarray(target, dtype=float)
    upward = np.asarray(upward, dtype=bool)
    d = sqrt_points.size - 1
    shape = np.broadcast_shapes(target.shape, upward.shape, np.shape(cum_grid)[:-1])
    target = np.broadcast_to(target, shape)
    cum_grid = np.broadcast_to(cum_grid, shape + (d + 1,))
    liquidity = np.broadcast_to(liquidity, shape + (d,))

    strictly_below = np.sum(cum_grid < target[..., None], axis=-1)
    at_or_below = np.sum(cum_grid <= target[..., None], axis=-1)
    tick = np.clip(np.where(upward, strictly_below, at_or_below) - 1, 0, d - 1)

    base = np.take_along_axis(cum_grid, tick[..., None], axis=-1)[..., 0]
    ell = np.take_along_axis(liquidity, tick[..., None], axis=-1)[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(ell > 0, (target - base) / ell, 0.0)
    return sqrt_points[tick] + step
