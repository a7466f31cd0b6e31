"""
Single-LP mean-variance optimization.

An LP of type (capital k, risk aversion lambda, belief delta) picks a tick
range (j1, j2) maximizing V = E[profit] - lambda Var[profit], where profit is
its share of swap fees over the horizon. Values are estimated with the
Monte-Carlo kernel; candidate actions share the same swap paths.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import InvalidInputError, PartialFillError
from app.engine.pool import (
    LiquidityPosition,
    PoolState,
    PriceGrid,
    execute_swap,
    liquidity_per_tick,
    unit_fee_volume,
    unit_token_requirements,
)
from app.engine.simulation import FeeVolume, SimulationContext, simulate_fee_volume

logger = logging.getLogger(__name__)

Action = Tuple[int, int]

DEFAULT_CAPITALS = (2124.0, 35786.0, 1706034.0)
LAMBDA_MAX_SINGLE = 5.0
LAMBDA_MAX_NPLAYER = 3.0
BELIEFS = (-1, 0, 1)


# ==================== Domain Types ====================

@dataclass(frozen=True)
class LpType:
    """theta = (capital k in token B, risk aversion lambda, trend belief delta)."""

    capital: float
    risk_aversion: float = 0.0
    belief: int = 0

    def __post_init__(self):
        if not self.capital > 0:
            raise InvalidInputError("capital must be positive")
        if self.risk_aversion < 0:
            raise InvalidInputError("risk aversion must be non-negative")
        if self.belief not in BELIEFS:
            raise InvalidInputError(f"belief {self.belief!r} not in {BELIEFS}")


@dataclass(frozen=True)
class ActionSpace:
    """All ranges (j1, j2) with 1 <= j1 < j2 <= d+1, in lexicographic order."""

    d: int
    actions: Tuple[Action, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.d < 1:
            raise InvalidInputError("action space needs at least one tick")
        actions = tuple((j1, j2) for j1 in range(1, self.d + 1) for j2 in range(j1 + 1, self.d + 2))
        object.__setattr__(self, "actions", actions)

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self) -> Iterator[Action]:
        return iter(self.actions)

    def __getitem__(self, index: int) -> Action:
        return self.actions[index]

    def index(self, action: Action) -> int:
        j1, j2 = action
        if not 1 <= j1 < j2 <= self.d + 1:
            raise InvalidInputError(f"action {action} outside the action space")
        # rows before j1 hold d, d-1, ... actions
        before = (j1 - 1) * self.d - (j1 - 1) * (j1 - 2) // 2
        return before + (j2 - j1 - 1)

    @property
    def lowers(self) -> np.ndarray:
        return np.array([a[0] for a in self.actions])

    @property
    def uppers(self) -> np.ndarray:
        return np.array([a[1] for a in self.actions])

    def indicator_matrix(self) -> np.ndarray:
        """(|J|, d) matrix with row a equal to 1 on the ticks of action a."""
        ticks = np.arange(1, self.d + 1)
        return ((ticks >= self.lowers[:, None]) & (ticks < self.uppers[:, None])).astype(float)


@dataclass(frozen=True)
class ValueEstimate:
    mean: float
    variance: float
    value: float
    n_paths: int
    std_error: float

    @classmethod
    def from_samples(cls, profits: np.ndarray, risk_aversion: float) -> "ValueEstimate":
        profits = np.asarray(profits, dtype=float)
        n = profits.size
        if n < 2:
            raise InvalidInputError("need at least two profit samples")
        mean = float(np.mean(profits))
        variance = float(np.var(profits, ddof=1))
        return cls(
            mean=mean,
            variance=variance,
            value=mean - risk_aversion * variance,
            n_paths=n,
            std_error=float(np.sqrt(variance / n)),
        )


# ==================== Costs ====================

def unit_costs(space: ActionSpace, grid: PriceGrid, pool_rate: float, market_rate: float) -> np.ndarray:
    """Token-B cost of one unit of liquidity for every action."""
    token_a, token_b = unit_token_requirements(1, grid.d + 1, grid, pool_rate)
    prefix = np.concatenate([[0.0], np.cumsum(token_b + market_rate * token_a)])
    return prefix[space.uppers - 1] - prefix[space.lowers - 1]


def action_units(space: ActionSpace, capital: float, context: SimulationContext) -> np.ndarray:
    """Units per tick an LP with ``capital`` gets for every action."""
    return capital / unit_costs(space, context.grid, context.pool_rate, context.market_rate)


def position_for(action: Action, lp: LpType, context: SimulationContext) -> LiquidityPosition:
    j1, j2 = action
    u = liquidity_per_tick(j1, j2, lp.capital, context.market_rate, context.grid, context.pool_rate)
    return LiquidityPosition(j1, j2, u)


def per_capital_volume(volume: FeeVolume, space: ActionSpace, costs: np.ndarray, lane: int = 0) -> np.ndarray:
    """
    Fees per unit of capital, shape (|J|, P), for every action on one shared lane.

    Used when the LP's own liquidity does not move the pool (mean field).
    """
    prefix = volume.range_sums()[lane]
    per_unit = prefix[:, space.uppers - 1] - prefix[:, space.lowers - 1]
    return per_unit.T / costs[:, None]


# ==================== Operations ====================

def per_swap_reward(xi: float, action: Action, state: PoolState, lp: LpType, market_rate: float) -> float:
    """
    LP fees from one swap: sum over its ticks of (u / l1_i) phi_i.

    ``state`` holds the pool before the LP enters; l1 adds its position.
    """
    j1, j2 = action
    u = liquidity_per_tick(j1, j2, lp.capital, market_rate, state.grid, state.pool_rate)
    position = LiquidityPosition(j1, j2, u)
    pool = state.with_liquidity(state.liquidity + position.expand(state.d))
    outcome = execute_swap(pool, xi)
    per_unit = unit_fee_volume(pool, outcome)
    return float(u * np.sum(per_unit[j1 - 1:j2 - 1]))


def simulate_profit(
    action: Action,
    lp: LpType,
    base_liquidity: np.ndarray,
    context: SimulationContext,
    rng: np.random.Generator,
) -> float:
    """
    Profit of ``action`` along one path, with the scalar pool operations.

    Draws per block follow the kernel's layout (one normal, three uniforms).
    """
    position = position_for(action, lp, context)
    state = context.pool(np.asarray(base_liquidity, dtype=float) + position.expand(context.d))
    market = context.market.with_belief(lp.belief)
    m = float(context.market_rate)
    j1, j2 = action
    profit = 0.0
    clamps = 0

    for _ in range(context.horizon):
        normal = rng.standard_normal(1)
        uniforms = rng.random((3, 1))
        m = float(market.advance(m, normal)[0])
        arbitrage = state.pool_rate - m
        if not uniforms[0, 0] < context.arrival.probability(arbitrage):
            continue
        sizes, _ = context.density.quantile(np.array(arbitrage), np.array(uniforms[1, 0]))
        xi = float(sizes)
        if xi == 0.0:
            continue
        try:
            outcome = execute_swap(state, xi)
        except PartialFillError:
            clamps += 1
            outcome = execute_swap(state, xi, allow_partial=True)
        profit += position.units_per_tick * float(np.sum(unit_fee_volume(state, outcome)[j1 - 1:j2 - 1]))
        state = outcome.apply(state)

    if clamps:
        logger.warning(f"{clamps} swaps exceeded pool capacity and were clamped")
    return profit


def estimate_value(
    action: Action,
    lp: LpType,
    base_liquidity: np.ndarray,
    context: SimulationContext,
    n_paths: Optional[int] = None,
) -> ValueEstimate:
    """Mean-variance value of ``action`` over ``n_paths`` simulated paths."""
    if n_paths is not None:
        context = context.evolve(n_paths=n_paths)
    position = position_for(action, lp, context)
    lane = np.asarray(base_liquidity, dtype=float) + position.expand(context.d)
    volume = simulate_fee_volume(context, lane[None, :], lp.belief)
    volume.counters.log_summary(f"value of {action}")
    profits = position.units_per_tick * volume.position_volume(0, *action)
    return ValueEstimate.from_samples(profits, lp.risk_aversion)


def evaluate_actions(
    lp: LpType,
    base_liquidity: np.ndarray,
    context: SimulationContext,
    redraw: bool = False,
) -> List[ValueEstimate]:
    """
    Value of every action against ``base_liquidity`` plus the LP's own position.

    All actions share one set of swap paths unless ``redraw`` gives each
    action its own paths.
    """
    space = ActionSpace(context.d)
    base = np.asarray(base_liquidity, dtype=float)
    units = action_units(space, lp.capital, context)
    lanes = base[None, :] + units[:, None] * space.indicator_matrix()

    if redraw:
        estimates = []
        for index, action in enumerate(space):
            seed = int(np.random.SeedSequence((context.seed, index)).generate_state(1)[0])
            volume = simulate_fee_volume(context.evolve(seed=seed), lanes[index:index + 1], lp.belief)
            profits = units[index] * volume.position_volume(0, *action)
            estimates.append(ValueEstimate.from_samples(profits, lp.risk_aversion))
        return estimates

    volume = simulate_fee_volume(context, lanes, lp.belief)
    volume.counters.log_summary(f"action scan for {lp}")
    prefix = volume.range_sums()
    lane_index = np.arange(len(space))
    per_unit = prefix[lane_index, :, space.uppers - 1] - prefix[lane_index, :, space.lowers - 1]
    profits = units[:, None] * per_unit
    return [ValueEstimate.from_samples(row, lp.risk_aversion) for row in profits]


def best_action(space: ActionSpace, estimates: Sequence[ValueEstimate]) -> int:
    """Index of the highest value; ties go to the lexicographically smallest action."""
    values = np.array([e.value for e in estimates])
    return int(np.argmax(values))


def optimize_single(
    lp: LpType,
    base_liquidity: np.ndarray,
    context: SimulationContext,
    n_paths: Optional[int] = None,
    redraw: bool = False,
) -> Tuple[LiquidityPosition, ValueEstimate]:
    """Exhaustive scan of the action space for one LP."""
    if n_paths is not None:
        context = context.evolve(n_paths=n_paths)
    space = ActionSpace(context.d)
    estimates = evaluate_actions(lp, base_liquidity, context, redraw=redraw)
    index = best_action(space, estimates)
    position = position_for(space[index], lp, context)
    logger.info(
        f"Best action for {lp}: {space[index]} value={estimates[index].value:.6g} "
        f"(mean={estimates[index].mean:.6g}, se={estimates[index].std_error:.3g})"
    )
    return position, estimates[index]
