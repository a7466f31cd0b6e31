"""
Unit tests for type distributions, mean-field and N-player equilibria and calibration.

Equilibrium tests run in a context without swaps, where every action is
worth nothing and the first range (1, 2) wins every tie; that makes the
fixed points known in advance.
"""

import numpy as np
import pytest
from scipy.integrate import trapezoid

from app.core.errors import InvalidInputError, NonConvergenceError, ZeroMassError
from app.engine import games
from app.engine.games import (
    StrategyProfile,
    TypeDistribution,
    TypeGrid,
    action_distribution,
    best_response_mfg,
    calibrate_mfg,
    calibrate_nplayer,
    equilibrium_deviation_gain,
    fictitious_play_mfg,
    fictitious_play_nplayer,
    mfg_liquidity,
    position_rows,
    profile_liquidity,
)
from app.engine.metrics import mass_ratio
from app.engine.optimizer import ActionSpace, LpType, action_units


@pytest.fixture
def small_grid() -> TypeGrid:
    return TypeGrid(capitals=(1000.0, 5000.0), lambda_max=1.0, n_lambda=3, beliefs=(0,))


@pytest.fixture
def uniform(small_grid) -> TypeDistribution:
    return TypeDistribution.from_type_masses(small_grid, np.ones(small_grid.shape), population=2.0, smooth=False)


def first_range(grid: TypeGrid) -> StrategyProfile:
    return StrategyProfile(tuple((1, 2) for _ in range(grid.size)))


@pytest.mark.unit
class TestTypeGrid:
    """Test the discretized type space."""

    def test_shape(self, small_grid):
        assert small_grid.shape == (2, 1, 3)
        assert small_grid.size == 6
        assert small_grid.lambdas == pytest.approx([0.0, 0.5, 1.0])

    def test_type_order(self, small_grid):
        types = small_grid.types()
        assert types[0] == LpType(1000.0, 0.0, 0)
        assert types[2] == LpType(1000.0, 1.0, 0)
        assert types[3] == LpType(5000.0, 0.0, 0)

    def test_quadrature_weights(self, small_grid):
        assert small_grid.quadrature_weights() == pytest.approx([0.25, 0.5, 0.25])

    def test_invalid_belief(self):
        with pytest.raises(InvalidInputError):
            TypeGrid(beliefs=(0, 3))

    def test_invalid_capital(self):
        with pytest.raises(InvalidInputError):
            TypeGrid(capitals=(0.0,))


@pytest.mark.unit
class TestTypeDistribution:
    """Test type distributions and their smoothing."""

    def test_masses_normalized(self, uniform):
        assert uniform.type_masses().sum() == pytest.approx(1.0)
        assert uniform.cell_weights.sum() == pytest.approx(1.0)
        assert uniform.capital_marginal() == pytest.approx([0.5, 0.5])
        assert uniform.belief_marginal() == pytest.approx([1.0])

    def test_smoothing_keeps_cell_weights(self, small_grid):
        masses = np.array([[[3.0, 1.0, 0.0]], [[0.0, 2.0, 2.0]]])
        smoothed = TypeDistribution.from_type_masses(small_grid, masses, smooth=True)
        assert smoothed.cell_weights == pytest.approx([[0.5], [0.5]])
        for k in range(2):
            area = trapezoid(smoothed.lambda_density[k, 0], small_grid.lambdas)
            assert area == pytest.approx(smoothed.cell_weights[k, 0])

    def test_zero_masses(self, small_grid):
        with pytest.raises(ZeroMassError):
            TypeDistribution.from_type_masses(small_grid, np.zeros(small_grid.shape))

    def test_weights_must_sum_to_one(self, small_grid):
        with pytest.raises(InvalidInputError):
            TypeDistribution(small_grid, np.array([[0.5], [0.2]]), np.ones(small_grid.shape))

    def test_point_mass_sampling(self, small_grid):
        dist = TypeDistribution.point_mass(small_grid, 1, 0, 2)
        types = dist.sample_types(5, np.random.default_rng(0))
        assert types == [LpType(5000.0, 1.0, 0)] * 5

    def test_dict_round_trip(self, uniform):
        restored = TypeDistribution.from_dict(uniform.to_dict())
        assert restored.grid == uniform.grid
        assert np.allclose(restored.lambda_density, uniform.lambda_density)
        assert restored.population == 2.0


@pytest.mark.unit
class TestMeanField:
    """Test mean-field liquidity and best responses."""

    def test_liquidity_of_point_mass(self, small_grid, context):
        dist = TypeDistribution.point_mass(small_grid, 0, 0, 0, population=3.0)
        strategy = StrategyProfile(tuple((2, 3) for _ in range(small_grid.size)))
        u = action_units(ActionSpace(4), 1000.0, context)[ActionSpace(4).index((2, 3))]
        assert mfg_liquidity(strategy, dist, context) == pytest.approx([0.0, 3.0 * u, 0.0, 0.0])

    def test_strategy_length_checked(self, uniform, context):
        with pytest.raises(InvalidInputError):
            mfg_liquidity(StrategyProfile(((1, 2),)), uniform, context)

    def test_position_rows_scale_with_capital(self, small_grid, context):
        rows = position_rows(small_grid, first_range(small_grid), context)
        assert rows.shape == (6, 4)
        assert rows[3, 0] == pytest.approx(5 * rows[0, 0])

    def test_best_response_without_swaps(self, small_grid, quiet_context, base_liquidity):
        strategy, values = best_response_mfg(base_liquidity, small_grid, quiet_context)
        assert set(strategy.actions) == {(1, 2)}
        assert np.all(values == 0)

    def test_converges_at_fixed_point(self, uniform, quiet_context):
        fixed = mfg_liquidity(first_range(uniform.grid), uniform, quiet_context)
        eq = fictitious_play_mfg(fixed, uniform, quiet_context, thresh=0.01, max_iter=5)
        assert eq.iterations == 1
        assert eq.errors == (0.0,)
        assert eq.liquidity == pytest.approx(fixed)

    def test_returned_liquidity_is_mean_field_of_strategy(self, small_grid, quiet_context):
        """Same shape as the fixed point but a twentieth of its mass is not an equilibrium."""
        lone = TypeDistribution.point_mass(small_grid, 0, 0, 0, population=1.0)
        generated = mfg_liquidity(first_range(small_grid), lone, quiet_context)
        initial = generated / 20.0

        eq = fictitious_play_mfg(initial, lone, quiet_context, thresh=0.01, max_iter=50)

        assert eq.iterations > 1
        assert eq.liquidity == pytest.approx(mfg_liquidity(eq.strategy, lone, quiet_context))
        assert mass_ratio(eq.liquidity, generated) == pytest.approx(1.0)

    def test_mass_gap_blocks_convergence(self, small_grid, quiet_context):
        lone = TypeDistribution.point_mass(small_grid, 0, 0, 0, population=1.0)
        initial = mfg_liquidity(first_range(small_grid), lone, quiet_context) / 20.0
        with pytest.raises(NonConvergenceError) as exc_info:
            fictitious_play_mfg(initial, lone, quiet_context, thresh=0.01, max_iter=1)
        assert exc_info.value.errors == [pytest.approx(0.0)]

    def test_empty_initial_liquidity(self, uniform, quiet_context):
        """An empty pool is infinitely far from any iterate and play moves on."""
        fixed = mfg_liquidity(first_range(uniform.grid), uniform, quiet_context)

        eq = fictitious_play_mfg(np.zeros(4), uniform, quiet_context, thresh=0.01, max_iter=30)

        assert np.isinf(eq.errors[0])
        assert 20 <= eq.iterations <= 21
        assert eq.liquidity == pytest.approx(fixed)

    def test_non_convergence_carries_best_iterate(self, uniform, quiet_context):
        initial = np.array([0.0, 0.0, 0.0, 50.0])
        with pytest.raises(NonConvergenceError) as exc_info:
            fictitious_play_mfg(initial, uniform, quiet_context, thresh=0.01, max_iter=1)
        liquidity, strategy = exc_info.value.best_iterate
        assert liquidity == pytest.approx(mfg_liquidity(strategy, uniform, quiet_context))
        assert exc_info.value.errors == [pytest.approx(3.0)]

    def test_threshold_must_be_positive(self, uniform, quiet_context, base_liquidity):
        with pytest.raises(InvalidInputError):
            fictitious_play_mfg(base_liquidity, uniform, quiet_context, thresh=0.0)
        with pytest.raises(InvalidInputError):
            fictitious_play_mfg(base_liquidity, uniform, quiet_context, mass_tol=0.0)


@pytest.mark.unit
class TestCalibrateMfg:
    def test_reproduces_reachable_target(self, small_grid, quiet_context):
        target = np.array([40.0, 0.0, 0.0, 0.0])
        calibration = calibrate_mfg(target, small_grid, quiet_context, smooth=False)
        assert calibration.residual == pytest.approx(0.0, abs=1e-9)
        rebuilt = mfg_liquidity(calibration.strategy, calibration.distribution, quiet_context)
        assert rebuilt == pytest.approx(target)
        assert calibration.action_weights[0] == pytest.approx(1.0)

    def test_unreachable_target(self, small_grid, quiet_context):
        with pytest.raises(ZeroMassError):
            calibrate_mfg(np.array([0.0, 0.0, 0.0, 5.0]), small_grid, quiet_context)

    def test_action_distribution(self, uniform):
        space = ActionSpace(4)
        strategy = StrategyProfile(((1, 2),) * 3 + ((2, 4),) * 3)
        weights = action_distribution(strategy, uniform, space)
        assert weights.sum() == pytest.approx(1.0)
        assert weights[space.index((1, 2))] == pytest.approx(0.5)


@pytest.mark.unit
class TestNplayer:
    """Test N-player fictitious play."""

    @pytest.fixture
    def players(self):
        return [LpType(1000.0), LpType(5000.0, 0.5)]

    def test_profile_liquidity(self, players, context):
        rows = profile_liquidity(players, StrategyProfile(((1, 3), (2, 3))), context)
        assert rows.shape == (2, 4)
        assert rows[0, 2] == 0.0 and rows[0, 0] > 0
        assert rows[1, 1] > 0 and rows[1, 0] == 0.0

    def test_converges_at_fixed_point(self, players, quiet_context):
        initial = StrategyProfile(((1, 2), (1, 2)))
        eq = fictitious_play_nplayer(players, quiet_context, initial=initial, thresh=0.01, max_iter=3)
        assert eq.profile == initial
        assert eq.iterations == 1

    def test_non_convergence(self, players, quiet_context):
        with pytest.raises(NonConvergenceError) as exc_info:
            fictitious_play_nplayer(players, quiet_context, thresh=0.01, max_iter=1)
        assert exc_info.value.best_iterate == StrategyProfile(((1, 2), (1, 2)))

    def test_resting_liquidity_in_returned_pool(self, players, quiet_context):
        resting = np.array([0.0, 0.0, 0.0, 50.0])
        initial = StrategyProfile(((1, 2), (1, 2)))

        eq = fictitious_play_nplayer(players, quiet_context, initial=initial, thresh=0.01, base_liquidity=resting)

        own = profile_liquidity(players, eq.profile, quiet_context).sum(axis=0)
        assert eq.liquidity == pytest.approx(resting + own)

    def test_resting_liquidity_reaches_best_responses(self, players, quiet_context, mocker):
        resting = np.array([7.0, 0.0, 0.0, 0.0])
        spy = mocker.spy(games, "evaluate_actions")

        fictitious_play_nplayer(
            players, quiet_context, initial=StrategyProfile(((1, 2), (1, 2))), thresh=0.01, base_liquidity=resting
        )

        for call in spy.call_args_list:
            assert call.args[1][0] >= 7.0

    def test_resting_liquidity_shape_checked(self, players, quiet_context):
        with pytest.raises(InvalidInputError):
            fictitious_play_nplayer(players, quiet_context, base_liquidity=np.ones(3))

    def test_no_players(self, quiet_context):
        with pytest.raises(InvalidInputError):
            fictitious_play_nplayer([], quiet_context)

    def test_deviation_gain_at_equilibrium(self, players, quiet_context):
        gains = equilibrium_deviation_gain(players, StrategyProfile(((1, 2), (1, 2))), quiet_context)
        assert [g for g, _ in gains] == [0.0, 0.0]


@pytest.mark.unit
class TestCalibrateNplayer:
    def test_population_matches_target(self, small_grid, quiet_context):
        target = np.array([4.0, 0.0, 0.0, 0.0])
        calibration = calibrate_nplayer(
            target, 3, small_grid, quiet_context,
            capital_weights=(0.5, 0.5), n_samples=3, paths_per_sample=2, smooth=False,
        )
        assert set(calibration.strategy.actions) == {(1, 2)}
        assert calibration.distribution.type_masses().ravel() == pytest.approx(np.full(6, 1 / 6))
        rebuilt = mfg_liquidity(calibration.strategy, calibration.distribution, quiet_context)
        assert rebuilt.sum() == pytest.approx(4.0)

    def test_needs_two_players(self, small_grid, quiet_context):
        with pytest.raises(InvalidInputError):
            calibrate_nplayer(np.ones(4), 1, small_grid, quiet_context)

    def test_capital_weights_length(self, small_grid, quiet_context):
        with pytest.raises(InvalidInputError):
            calibrate_nplayer(np.ones(4), 3, small_grid, quiet_context, capital_weights=(1.0,))
