"""
Equilibria and type calibration for the LP population.

Two views of the same market:

* N-player: N concrete LPs, each best-responding to the liquidity of the
  others. Solved by fictitious play with per-player memories.
* Mean field: a continuum of LPs described by a type distribution; the
  representative LP best-responds to the aggregate liquidity and its own
  position does not move the pool.

Calibration inverts an observed liquidity snapshot into a type distribution
with non-negative least squares.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

from app.core.errors import InvalidInputError, NonConvergenceError, ZeroMassError
from app.engine.metrics import mass_ratio, nnls_fit, wasserstein1
from app.engine.optimizer import (
    BELIEFS,
    DEFAULT_CAPITALS,
    LAMBDA_MAX_NPLAYER,
    Action,
    ActionSpace,
    LpType,
    action_units,
    best_action,
    evaluate_actions,
    per_capital_volume,
    unit_costs,
)
from app.engine.simulation import SimulationContext, simulate_fee_volume
from app.helpers import streams

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.1
DEFAULT_MASS_TOLERANCE = 0.05
DEFAULT_MAX_ITERATIONS = 200
N_LAMBDA = 30
OBSERVED_CAPITAL_WEIGHTS = (0.4725, 0.4894, 0.0381)


# ==================== Types ====================

@dataclass(frozen=True)
class TypeGrid:
    """Discretized type space: capitals x beliefs x lambda grid."""

    capitals: Tuple[float, ...] = DEFAULT_CAPITALS
    lambda_max: float = LAMBDA_MAX_NPLAYER
    n_lambda: int = N_LAMBDA
    beliefs: Tuple[int, ...] = BELIEFS

    def __post_init__(self):
        if not self.capitals or any(k <= 0 for k in self.capitals):
            raise InvalidInputError("capitals must be positive")
        if self.lambda_max < 0 or self.n_lambda < 1:
            raise InvalidInputError("lambda grid needs lambda_max >= 0 and at least one point")
        if any(b not in BELIEFS for b in self.beliefs):
            raise InvalidInputError(f"beliefs must be drawn from {BELIEFS}")
        object.__setattr__(self, "capitals", tuple(float(k) for k in self.capitals))
        object.__setattr__(self, "beliefs", tuple(int(b) for b in self.beliefs))

    @property
    def lambdas(self) -> np.ndarray:
        return np.linspace(0.0, self.lambda_max, self.n_lambda)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (len(self.capitals), len(self.beliefs), self.n_lambda)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def types(self) -> List[LpType]:
        """All types, capital-major then belief then lambda (the order of every flat array)."""
        return [
            LpType(capital=k, risk_aversion=float(lam), belief=b)
            for k in self.capitals
            for b in self.beliefs
            for lam in self.lambdas
        ]

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoid weights of the lambda grid."""
        if self.n_lambda == 1:
            return np.ones(1)
        h = self.lambda_max / (self.n_lambda - 1)
        weights = np.full(self.n_lambda, h)
        weights[[0, -1]] = h / 2
        return weights

    def to_dict(self) -> Dict[str, Any]:
        return {
            "capitals": list(self.capitals),
            "lambda_max": self.lambda_max,
            "n_lambda": self.n_lambda,
            "beliefs": list(self.beliefs),
        }


@dataclass(frozen=True, eq=False)
class TypeDistribution:
    """
    Weights over (capital, belief) cells with a lambda density per cell.

    ``lambda_density[k, b]`` integrates (trapezoid rule on the lambda grid)
    to ``cell_weights[k, b]``; the cell weights sum to one. ``population``
    is the total liquidity mass the mean field carries.
    """

    grid: TypeGrid
    cell_weights: np.ndarray
    lambda_density: np.ndarray
    population: float = 1.0

    def __post_init__(self):
        cells = np.array(self.cell_weights, dtype=float).reshape(self.grid.shape[:2])
        density = np.array(self.lambda_density, dtype=float).reshape(self.grid.shape)
        if np.any(cells < 0) or np.any(density < 0):
            raise InvalidInputError("type weights must be non-negative")
        if not np.isclose(cells.sum(), 1.0, atol=1e-9):
            raise InvalidInputError(f"cell weights sum to {cells.sum()!r}, not 1")
        if self.population < 0:
            raise InvalidInputError("population must be non-negative")
        object.__setattr__(self, "cell_weights", cells)
        object.__setattr__(self, "lambda_density", density)

    @classmethod
    def from_type_masses(
        cls,
        grid: TypeGrid,
        masses: np.ndarray,
        population: float = 1.0,
        smooth: bool = True,
    ) -> "TypeDistribution":
        """
        Build from point masses on the type grid.

        With ``smooth`` each cell's lambda masses are replaced by a Gaussian
        KDE (Scott bandwidth) truncated to [0, lambda_max] and renormalized
        to the cell weight.
        """
        masses = np.asarray(masses, dtype=float).reshape(grid.shape)
        total = masses.sum()
        if total <= 0:
            raise ZeroMassError("type masses have no weight")
        masses = masses / total
        cells = masses.sum(axis=-1)
        quad = grid.quadrature_weights()
        lambdas = grid.lambdas
        density = masses / quad

        if smooth and grid.n_lambda > 1:
            for k, b in zip(*np.nonzero(cells)):
                row = masses[k, b]
                support = row > 0
                if np.count_nonzero(support) < 2:
                    continue
                kde = stats.gaussian_kde(lambdas[support], weights=row[support])
                smoothed = kde(lambdas)
                area = trapezoid(smoothed, lambdas)
                if area > 0:
                    density[k, b] = smoothed * cells[k, b] / area
        return cls(grid=grid, cell_weights=cells, lambda_density=density, population=population)

    @classmethod
    def point_mass(cls, grid: TypeGrid, capital_index: int, belief_index: int, lambda_index: int, population: float = 1.0) -> "TypeDistribution":
        masses = np.zeros(grid.shape)
        masses[capital_index, belief_index, lambda_index] = 1.0
        return cls.from_type_masses(grid, masses, population=population, smooth=False)

    def type_masses(self) -> np.ndarray:
        """Mass of every grid type, shape (K, B, n_lambda), summing to one."""
        masses = self.lambda_density * self.grid.quadrature_weights()
        return masses / masses.sum()

    def capital_marginal(self) -> np.ndarray:
        return self.cell_weights.sum(axis=1)

    def belief_marginal(self) -> np.ndarray:
        return self.cell_weights.sum(axis=0)

    def sample_types(self, n: int, rng: np.random.Generator) -> List[LpType]:
        """n LP types drawn independently from the distribution."""
        flat = self.type_masses().ravel()
        picks = rng.choice(flat.size, size=n, p=flat / flat.sum())
        types = self.grid.types()
        return [types[i] for i in picks]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid": self.grid.to_dict(),
            "cell_weights": self.cell_weights.tolist(),
            "lambda_density": self.lambda_density.tolist(),
            "population": self.population,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TypeDistribution":
        grid = data["grid"]
        return cls(
            grid=TypeGrid(
                capitals=tuple(grid["capitals"]),
                lambda_max=float(grid["lambda_max"]),
                n_lambda=int(grid["n_lambda"]),
                beliefs=tuple(grid["beliefs"]),
            ),
            cell_weights=np.asarray(data["cell_weights"]),
            lambda_density=np.asarray(data["lambda_density"]),
            population=float(data.get("population", 1.0)),
        )


@dataclass(frozen=True)
class StrategyProfile:
    """One action per player, or per grid type in TypeGrid order."""

    actions: Tuple[Action, ...]

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple((int(a), int(b)) for a, b in self.actions))

    def __len__(self) -> int:
        return len(self.actions)

    def validate(self, space: ActionSpace):
        for action in self.actions:
            space.index(action)


@dataclass
class FictitiousPlayState:
    iteration: int
    history: np.ndarray
    errors: List[float] = field(default_factory=list)

    @property
    def last_error(self) -> Optional[float]:
        return self.errors[-1] if self.errors else None

    def absorb(self, iterate: np.ndarray):
        """Fold a new iterate into the running mean."""
        self.iteration += 1
        self.history = self.history + (iterate - self.history) / (self.iteration + 1)


@dataclass(frozen=True, eq=False)
class MfgEquilibrium:
    liquidity: np.ndarray
    strategy: StrategyProfile
    iterations: int
    errors: Tuple[float, ...]


@dataclass(frozen=True, eq=False)
class NplayerEquilibrium:
    profile: StrategyProfile
    liquidity: np.ndarray
    iterations: int
    errors: Tuple[float, ...]


@dataclass(frozen=True, eq=False)
class Calibration:
    distribution: TypeDistribution
    strategy: StrategyProfile
    residual: float
    action_weights: np.ndarray


# ==================== Mean field ====================

def type_units(grid: TypeGrid, strategy: StrategyProfile, context: SimulationContext) -> np.ndarray:
    """Units per tick each grid type deploys under ``strategy``."""
    space = ActionSpace(context.d)
    costs = unit_costs(space, context.grid, context.pool_rate, context.market_rate)
    capitals = np.repeat(grid.capitals, len(grid.beliefs) * grid.n_lambda)
    index = np.array([space.index(a) for a in strategy.actions])
    return capitals / costs[index]


def position_rows(grid: TypeGrid, strategy: StrategyProfile, context: SimulationContext) -> np.ndarray:
    """(n_types, d) matrix: row of type theta is u(theta) on its action's ticks."""
    space = ActionSpace(context.d)
    index = np.array([space.index(a) for a in strategy.actions])
    return type_units(grid, strategy, context)[:, None] * space.indicator_matrix()[index]


def mfg_liquidity(strategy: StrategyProfile, distribution: TypeDistribution, context: SimulationContext) -> np.ndarray:
    """Liquidity of the mean field: population * sum over types of mass * u * 1[action]."""
    if len(strategy) != distribution.grid.size:
        raise InvalidInputError("strategy must assign an action to every grid type")
    rows = position_rows(distribution.grid, strategy, context)
    return distribution.population * (distribution.type_masses().ravel() @ rows)


def best_response_mfg(liquidity: np.ndarray, grid: TypeGrid, context: SimulationContext) -> Tuple[StrategyProfile, np.ndarray]:
    """
    Best action of every grid type against the mean-field pool ``liquidity``.

    One simulation per belief serves every capital and risk aversion:
    with w_a the fees per unit of capital of action a, a type's value is
    k mean(w_a) - lambda k^2 var(w_a). Returns the strategy and the
    (n_types,) best values.
    """
    liquidity = np.asarray(liquidity, dtype=float)
    space = ActionSpace(context.d)
    costs = unit_costs(space, context.grid, context.pool_rate, context.market_rate)
    capitals = np.asarray(grid.capitals)[:, None, None]
    lambdas = grid.lambdas[None, None, :]

    actions = np.empty(grid.shape, dtype=np.intp)
    values = np.empty(grid.shape)
    for b, belief in enumerate(grid.beliefs):
        volume = simulate_fee_volume(context, liquidity[None, :], belief)
        volume.counters.log_summary(f"mean-field best response (belief {belief})")
        w = per_capital_volume(volume, space, costs)
        mean = w.mean(axis=1)
        var = w.var(axis=1, ddof=1)
        # (K, 1, n_lambda, |J|)
        scores = capitals[..., None] * mean - lambdas[..., None] * capitals[..., None] ** 2 * var
        actions[:, b, :] = np.argmax(scores[:, 0], axis=-1)
        values[:, b, :] = np.max(scores[:, 0], axis=-1)

    strategy = StrategyProfile(tuple(space[i] for i in actions.ravel()))
    return strategy, values.ravel()


def _mass_gap(history: np.ndarray, iterate: np.ndarray) -> float:
    """|1 - mass(history) / mass(iterate)|; infinite when either side is empty."""
    if history.sum() <= 0 or iterate.sum() <= 0:
        return np.inf
    return abs(1.0 - mass_ratio(history, iterate))


def fictitious_play_mfg(
    initial: np.ndarray,
    distribution: TypeDistribution,
    context: SimulationContext,
    thresh: float = DEFAULT_THRESHOLD,
    max_iter: int = DEFAULT_MAX_ITERATIONS,
    mass_tol: float = DEFAULT_MASS_TOLERANCE,
) -> MfgEquilibrium:
    """
    Mean-field fictitious play from the liquidity ``initial``.

    Each round best-responds to the running mean of past liquidity and
    stops when the liquidity generated by that best response is within
    ``thresh`` (W1, ticks) of the mean it responded to and their total
    masses agree within ``mass_tol``. The returned liquidity is that last
    iterate, the mean field of the returned strategy. An empty ``initial``
    is infinitely far from any iterate. With a bot in ``context`` this is
    the Stackelberg game: LPs anticipate the bot's attacks inside every
    best response.

    Raises:
        NonConvergenceError: ``max_iter`` rounds without convergence; carries
            the closest (liquidity, strategy) pair and the error history.
    """
    if thresh <= 0 or mass_tol <= 0:
        raise InvalidInputError("thresholds must be positive")
    state = FictitiousPlayState(iteration=0, history=np.asarray(initial, dtype=float).copy())
    best: Optional[Tuple[float, np.ndarray, StrategyProfile]] = None

    while state.iteration < max_iter:
        strategy, _ = best_response_mfg(state.history, distribution.grid, context)
        iterate = mfg_liquidity(strategy, distribution, context)
        gap = _mass_gap(state.history, iterate)
        error = wasserstein1(state.history, iterate) if np.isfinite(gap) else np.inf
        state.errors.append(error)
        logger.info(f"MFG fictitious play round {state.iteration + 1}: W1 = {error:.6f}, mass gap = {gap:.4f}")
        if best is None or error < best[0]:
            best = (error, iterate.copy(), strategy)
        if error < thresh and gap < mass_tol:
            return MfgEquilibrium(
                liquidity=iterate,
                strategy=strategy,
                iterations=state.iteration + 1,
                errors=tuple(state.errors),
            )
        state.absorb(iterate)

    raise NonConvergenceError(
        f"mean-field fictitious play did not reach W1 < {thresh} in {max_iter} rounds",
        best_iterate=(best[1], best[2]) if best else None,
        errors=state.errors,
    )


def calibrate_mfg(target: np.ndarray, grid: TypeGrid, context: SimulationContext, smooth: bool = True) -> Calibration:
    """
    Type distribution whose mean-field best response reproduces ``target``.

    Every grid type best-responds to ``target``; its position, scaled by
    its capital, is one row of the design matrix and non-negative least
    squares gives the type masses. Their total is the population.
    """
    target = np.asarray(target, dtype=float)
    strategy, _ = best_response_mfg(target, grid, context)
    rows = position_rows(grid, strategy, context)
    weights, residual = nnls_fit(rows, target)
    total = weights.sum()
    if total <= 0:
        raise ZeroMassError("no type reproduces any of the target liquidity")
    distribution = TypeDistribution.from_type_masses(grid, weights / total, population=float(total), smooth=smooth)
    space = ActionSpace(context.d)
    action_weights = action_distribution(strategy, distribution, space)
    logger.info(f"MFG calibration residual {residual:.6g}, population {total:.6g}")
    return Calibration(distribution, strategy, residual, action_weights)


def action_distribution(strategy: StrategyProfile, distribution: TypeDistribution, space: ActionSpace) -> np.ndarray:
    """Mass of the population on each action."""
    weights = np.zeros(len(space))
    for mass, action in zip(distribution.type_masses().ravel(), strategy.actions):
        weights[space.index(action)] += mass
    return weights


# ==================== N players ====================

def profile_liquidity(types: Sequence[LpType], profile: StrategyProfile, context: SimulationContext) -> np.ndarray:
    """(N, d) liquidity contributed by each player."""
    space = ActionSpace(context.d)
    rows = np.zeros((len(types), context.d))
    for n, (lp, action) in enumerate(zip(types, profile.actions)):
        units = action_units(space, lp.capital, context)[space.index(action)]
        rows[n, action[0] - 1:action[1] - 1] = units
    return rows


def best_response_nplayer(lp: LpType, opponents: np.ndarray, context: SimulationContext) -> Tuple[Action, float]:
    space = ActionSpace(context.d)
    estimates = evaluate_actions(lp, opponents, context)
    index = best_action(space, estimates)
    return space[index], estimates[index].value


def _resting(base_liquidity: Optional[np.ndarray], context: SimulationContext) -> np.ndarray:
    if base_liquidity is None:
        return np.zeros(context.d)
    base = np.asarray(base_liquidity, dtype=float)
    if base.shape != (context.d,) or np.any(base < 0):
        raise InvalidInputError(f"base liquidity must be {context.d} non-negative values")
    return base


def fictitious_play_nplayer(
    types: Sequence[LpType],
    context: SimulationContext,
    initial: Optional[StrategyProfile] = None,
    thresh: float = DEFAULT_THRESHOLD,
    max_iter: int = DEFAULT_MAX_ITERATIONS,
    base_liquidity: Optional[np.ndarray] = None,
) -> NplayerEquilibrium:
    """
    N-player fictitious play with per-player memories.

    Player n remembers the running mean of its opponents' liquidity and
    best-responds to it on top of ``base_liquidity``, the resting liquidity
    of LPs outside the game. A round whose players' total is within
    ``thresh`` of the remembered total ends the play once every player's
    action is also a best response to the actual opponents. The returned
    liquidity includes the resting liquidity.

    Raises:
        NonConvergenceError: no certified profile within ``max_iter`` rounds
    """
    if thresh <= 0:
        raise InvalidInputError("threshold must be positive")
    if not types:
        raise InvalidInputError("need at least one player")
    n_players = len(types)
    base = _resting(base_liquidity, context)
    profile = initial or StrategyProfile(tuple((1, context.d + 1) for _ in types))
    profile.validate(ActionSpace(context.d))

    rows = profile_liquidity(types, profile, context)
    memories = rows.sum(axis=0)[None, :] - rows
    state = FictitiousPlayState(iteration=0, history=rows.sum(axis=0))
    best: Optional[Tuple[float, StrategyProfile]] = None

    while state.iteration < max_iter:
        profile = StrategyProfile(tuple(
            best_response_nplayer(lp, base + memories[n], context)[0] for n, lp in enumerate(types)
        ))
        rows = profile_liquidity(types, profile, context)
        total = rows.sum(axis=0)
        error = wasserstein1(total, state.history)
        state.errors.append(error)
        logger.info(f"N-player fictitious play round {state.iteration + 1}: W1 = {error:.6f}")
        if best is None or error < best[0]:
            best = (error, profile)

        if error < thresh and _is_fixed_point(types, profile, rows, context, base):
            return NplayerEquilibrium(
                profile=profile,
                liquidity=base + total,
                iterations=state.iteration + 1,
                errors=tuple(state.errors),
            )

        opponents = total[None, :] - rows
        memories = memories + (opponents - memories) / (state.iteration + 2)
        state.absorb(total)

    raise NonConvergenceError(
        f"N-player fictitious play did not converge in {max_iter} rounds ({n_players} players)",
        best_iterate=best[1] if best else None,
        errors=state.errors,
    )


def _is_fixed_point(
    types: Sequence[LpType],
    profile: StrategyProfile,
    rows: np.ndarray,
    context: SimulationContext,
    base: np.ndarray,
) -> bool:
    total = base + rows.sum(axis=0)
    for n, lp in enumerate(types):
        action, _ = best_response_nplayer(lp, total - rows[n], context)
        if action != profile.actions[n]:
            return False
    return True


def equilibrium_deviation_gain(
    types: Sequence[LpType],
    profile: StrategyProfile,
    context: SimulationContext,
    base_liquidity: Optional[np.ndarray] = None,
) -> List[Tuple[float, float]]:
    """
    Best unilateral improvement of every player and the standard error of its current value.

    All actions are valued on the same swap paths.
    """
    space = ActionSpace(context.d)
    rows = profile_liquidity(types, profile, context)
    total = _resting(base_liquidity, context) + rows.sum(axis=0)
    gains = []
    for n, lp in enumerate(types):
        estimates = evaluate_actions(lp, total - rows[n], context)
        current = estimates[space.index(profile.actions[n])]
        best = max(e.value for e in estimates)
        gains.append((float(best - current.value), current.std_error))
    return gains


def calibrate_nplayer(
    target: np.ndarray,
    n_players: int,
    grid: TypeGrid,
    context: SimulationContext,
    capital_weights: Sequence[float] = OBSERVED_CAPITAL_WEIGHTS,
    n_samples: Optional[int] = None,
    paths_per_sample: int = 50,
    smooth: bool = True,
) -> Calibration:
    """
    Bayesian N-player calibration.

    Unit ranges are fitted to ``target`` by non-negative least squares to get
    the empirical action law mu. For each of ``n_samples`` draws of N-1
    opponents (actions from mu, capitals from ``capital_weights``) every
    grid type best-responds; each action's mass mu_q is split equally among
    the types choosing it. Mass of actions nobody chooses is dropped and the
    rest renormalized.
    """
    if n_players < 2:
        raise InvalidInputError("N-player calibration needs at least two players")
    target = np.asarray(target, dtype=float)
    space = ActionSpace(context.d)
    capital_weights = np.asarray(capital_weights, dtype=float)
    if capital_weights.size != len(grid.capitals):
        raise InvalidInputError("one capital weight per grid capital is required")
    capital_weights = capital_weights / capital_weights.sum()

    unit_weights, residual = nnls_fit(space.indicator_matrix(), target)
    if unit_weights.sum() <= 0:
        raise ZeroMassError("target has no liquidity to calibrate against")
    mu = unit_weights / unit_weights.sum()
    n_samples = n_samples or 100 * n_players
    sample_context = context.evolve(n_paths=max(2, paths_per_sample))
    costs = unit_costs(space, context.grid, context.pool_rate, context.market_rate)
    types = grid.types()

    masses = np.zeros(grid.size)
    counts = np.zeros((grid.size, len(space)))
    unmatched = 0.0
    for sample in range(n_samples):
        rng = streams.stream(context.seed, streams.OPPONENT_SAMPLES, sample)
        picks = rng.choice(len(space), size=n_players - 1, p=mu)
        capitals = rng.choice(np.asarray(grid.capitals), size=n_players - 1, p=capital_weights)
        opponents = np.zeros(context.d)
        for pick, capital in zip(picks, capitals):
            lo, hi = space[pick]
            opponents[lo - 1:hi - 1] += capital / costs[pick]

        choice = np.array([space.index(best_response_nplayer(lp, opponents, sample_context)[0]) for lp in types])
        counts[np.arange(grid.size), choice] += 1
        chosen_by = np.bincount(choice, minlength=len(space))
        for q in np.nonzero(mu)[0]:
            if chosen_by[q] == 0:
                unmatched += mu[q] / n_samples
                continue
            masses[choice == q] += mu[q] / chosen_by[q] / n_samples

    if masses.sum() <= 0:
        raise ZeroMassError("no grid type best-responds with any observed action")
    if unmatched > 0:
        logger.warning(f"{unmatched:.4f} of the action mass had no best-responding type; renormalized")
    nu = masses / masses.sum()
    positive = nu[nu > 0]
    logger.info(f"N-player calibration: residual {residual:.6g}, type entropy {-np.sum(positive * np.log(positive)):.4f}")

    distribution = TypeDistribution.from_type_masses(grid, nu, smooth=smooth)
    strategy = StrategyProfile(tuple(space[int(np.argmax(row))] for row in counts))
    # population scaled so the mean field carries the target's total liquidity
    per_population = float(mfg_liquidity(strategy, distribution, context).sum())
    if per_population > 0:
        distribution = TypeDistribution(
            grid, distribution.cell_weights, distribution.lambda_density, population=float(target.sum() / per_population)
        )
    return Calibration(distribution, strategy, residual, mu)
