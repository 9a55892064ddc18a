import math

import numpy as np
import pytest

from evbet.betting import ConstantStrategy, UniversalPortfolioStrategy
from evbet.confseq import (
    ConfidenceState,
    cs_interval,
    cs_update,
    default_mu_grid,
    run_cs_batch,
)
from evbet.domain import DiscreteDistribution, replicate_seed, sample_stream
from evbet.evariables import dominating_lambda


def small_state(running_intersect=False, grid=9, nodes=51):
    return ConfidenceState(
        default_mu_grid(grid),
        lambda mu: UniversalPortfolioStrategy(mu, nodes),
        delta=0.05,
        running_intersect=running_intersect,
    )


class TestGrid:
    def test_default_grid_is_open_and_equispaced(self):
        grid = default_mu_grid(99)
        assert len(grid) == 99
        assert grid[0] == pytest.approx(0.01)
        assert grid[-1] == pytest.approx(0.99)
        assert np.allclose(np.diff(grid), 0.01)


class TestCsUpdate:
    def test_zero_strategy_keeps_full_grid(self):
        state = ConfidenceState(
            default_mu_grid(9), lambda mu: ConstantStrategy(mu, 0.0), delta=0.05
        )
        for x in (0.0, 1.0, 0.3, 0.9):
            cs_update(state, x)
        lower, upper, alive = cs_interval(state, 4)
        assert alive == 9
        assert (lower, upper) == (pytest.approx(0.1), pytest.approx(0.9))

    def test_sure_ones_reject_small_means_first(self):
        grid = default_mu_grid(99)
        xs = np.ones(60)
        result = run_cs_batch(grid, xs, "up:101", 0.05)
        rejected = result.games.rejected_at
        hit = rejected > 0
        assert hit.any() and grid[hit].max() < grid[~hit].min()
        # rejection round weakly increases with the candidate mean
        rounds = rejected[hit]
        assert (np.diff(rounds) >= 0).all()

    def test_true_mean_survives_with_high_probability(self):
        reps, horizon = 200, 150
        survived = 0
        for i in range(reps):
            xs = sample_stream(DiscreteDistribution.bernoulli(0.5), horizon, replicate_seed(5, i))
            result = run_cs_batch(np.array([0.5]), xs, "up:101", 0.05)
            survived += int(result.games.rejected_at[0] == 0)
        slack = 3 * math.sqrt(0.05 * 0.95 / reps)
        assert survived / reps >= 0.95 - slack


class TestCsInterval:
    def test_no_data_full_span(self):
        state = small_state()
        lower, upper, alive = cs_interval(state, 0)
        assert alive == 9
        assert (lower, upper) == (pytest.approx(0.1), pytest.approx(0.9))

    def test_running_intersection_nested(self):
        xs = sample_stream(DiscreteDistribution.bernoulli(0.8), 120, 21)
        result = run_cs_batch(default_mu_grid(33), xs, "up:101", 0.05, running_intersect=True)
        widths = []
        for _, lower, upper, alive in result.intervals():
            widths.append(0.0 if alive == 0 else upper - lower)
        assert all(w2 <= w1 + 1e-15 for w1, w2 in zip(widths, widths[1:]))

    def test_raw_sets_can_grow(self):
        # Without intersection the hull may widen again; find one occurrence.
        xs = sample_stream(DiscreteDistribution.bernoulli(0.5), 200, 3)
        result = run_cs_batch(default_mu_grid(99), xs, "up:101", 0.2)
        widths = [upper - lower for _, lower, upper, alive in result.intervals() if alive]
        grew = any(b > a + 1e-12 for a, b in zip(widths, widths[1:]))
        assert grew

    def test_empty_set_reports_nan(self):
        state = ConfidenceState(np.array([0.5]), lambda mu: ConstantStrategy(mu, 2.0), 0.05)
        for _ in range(10):
            cs_update(state, 1.0)
        lower, upper, alive = cs_interval(state, 10)
        assert alive == 0
        assert math.isnan(lower) and math.isnan(upper)


class TestBatchAgainstObject:
    def test_same_wealth_and_sets(self):
        grid = default_mu_grid(7)
        xs = sample_stream(DiscreteDistribution.uniform_grid(3), 40, 17)
        state = ConfidenceState(grid, lambda mu: UniversalPortfolioStrategy(mu, 51), 0.05)
        for x in xs:
            cs_update(state, float(x))
        result = run_cs_batch(grid, xs, "up:51", 0.05)
        obj_wealth = np.array(state.log_wealth)  # (rounds, M)
        assert np.allclose(obj_wealth, result.games.log_wealth.T, atol=1e-9)
        for n in (1, 20, 40):
            assert cs_interval(state, n) == result.interval(n)


class TestClassDominanceTransfer:
    def test_hoeffding_sets_contain_coinbet_sets(self):
        # Per candidate mean, run a constant-alpha Hoeffding game and its
        # dominating coin-bet shadow on the same stream: the shadow's
        # confidence sets are contained in the Hoeffding ones at every round.
        grid = default_mu_grid(33)
        xs = sample_stream(DiscreteDistribution.bernoulli(0.7), 150, 9)
        alpha = 1.5
        threshold = math.log(1.0 / 0.05)
        in_h = np.empty((len(grid), len(xs)), dtype=bool)
        in_cb = np.empty_like(in_h)
        for j, mu in enumerate(grid):
            log_h = np.cumsum(alpha * (xs - mu) - alpha**2 / 8.0)
            lam = dominating_lambda(mu, alpha)
            log_cb = np.cumsum(np.log1p(lam * (xs - mu)))
            in_h[j] = log_h <= threshold
            in_cb[j] = log_cb <= threshold
        assert (in_cb <= in_h).all()  # membership implication, pointwise
