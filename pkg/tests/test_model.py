import math

import numpy as np
import pytest
from scipy.stats import norm

from querymind.model import (
    ABSOLUTE_DISTANCE,
    SQUARED_DISTANCE,
    BeliefParams,
    DegenerateBeliefError,
    GridBelief,
    InvalidInputError,
    Query,
    ThetaGrid,
    canonicalize,
    discretize_belief,
    mixture_density,
    response_prob,
    reward,
    sample_answer,
    uniform_belief,
)


class TestReward:
    def test_zero_distance(self):
        assert reward(2.0, 2.0, ABSOLUTE_DISTANCE) == 0.0

    def test_absolute(self):
        assert reward(2.0, -3.0, ABSOLUTE_DISTANCE) == -5.0

    def test_squared(self):
        assert reward(0.0, 2.0, SQUARED_DISTANCE) == -4.0

    def test_nonpositive(self):
        rng = np.random.default_rng(1)
        for theta, x in rng.uniform(-6, 6, size=(200, 2)):
            for form in (ABSOLUTE_DISTANCE, SQUARED_DISTANCE):
                r = reward(theta, x, form)
                assert r <= 0.0
                assert (r == 0.0) == (x == theta)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            reward(math.nan, 0.0)
        with pytest.raises(InvalidInputError):
            reward(0.0, math.inf)

    def test_rejects_unknown_form(self):
        with pytest.raises(InvalidInputError):
            reward(0.0, 0.0, "cubic")


class TestResponseProb:
    def test_identical_items_give_half(self):
        for theta in (-4.0, 0.0, 3.7):
            assert response_prob(theta, Query(1.25, 1.25)) == 0.5

    def test_symmetric_distances_give_half(self):
        assert response_prob(0.0, Query(-1.0, 1.0)) == 0.5

    def test_logistic_of_reward_gap(self):
        # sigma(5) from a 50-digit evaluation.
        import mpmath

        mpmath.mp.dps = 50
        expected = float(1 / (1 + mpmath.exp(-5)))
        assert response_prob(2.0, Query(-3.0, 2.0)) == pytest.approx(expected, abs=1e-12)
        assert response_prob(2.0, Query(-3.0, 2.0)) == pytest.approx(0.993307, abs=1e-6)

    def test_antisymmetry(self):
        rng = np.random.default_rng(7)
        for form in (ABSOLUTE_DISTANCE, SQUARED_DISTANCE):
            for theta, x1, x2 in rng.uniform(-6, 6, size=(1000, 3)):
                p = response_prob(theta, Query(x1, x2), form)
                q = response_prob(theta, Query(x2, x1), form)
                assert 0.0 <= p <= 1.0
                assert abs(p + q - 1.0) <= 1e-12

    def test_strictly_inside_unit_interval(self):
        # Absolute-distance reward gaps stay <= 24 on the default feature
        # range, so the logistic never saturates in float64.  (The squared
        # form can reach gap 144 and saturate to an exact 0 or 1.)
        rng = np.random.default_rng(8)
        for theta, x1, x2 in rng.uniform(-6, 6, size=(1000, 3)):
            p = response_prob(theta, Query(x1, x2), ABSOLUTE_DISTANCE)
            assert 0.0 < p < 1.0


class TestSampleAnswer:
    def test_deterministic_given_seed(self):
        q = Query(-1.0, 1.0)
        draws_a = [sample_answer(0.0, q, ABSOLUTE_DISTANCE, np.random.default_rng(5))
                   for _ in range(10)]
        draws_b = [sample_answer(0.0, q, ABSOLUTE_DISTANCE, np.random.default_rng(5))
                   for _ in range(10)]
        assert draws_a == draws_b

    def test_near_degenerate_probability(self):
        # Reward gap 40 puts the answer probability within 1e-12 of 1.
        q = Query(-20.0, 20.0)
        assert response_prob(20.0, q) > 1.0 - 1e-12
        for seed in range(1000):
            assert sample_answer(20.0, q, ABSOLUTE_DISTANCE, np.random.default_rng(seed)) == 1

    def test_monte_carlo_rate(self):
        # theta = ln(3)/2 against (-3, 3) answers y=1 with probability 0.75.
        theta = math.log(3.0) / 2.0
        q = Query(-3.0, 3.0)
        assert response_prob(theta, q) == pytest.approx(0.75, abs=1e-12)
        rng = np.random.default_rng(123)
        mean = np.mean([sample_answer(theta, q, ABSOLUTE_DISTANCE, rng)
                        for _ in range(10_000)])
        assert abs(mean - 0.75) <= 0.02


class TestMixtureDensity:
    def test_single_component_peak(self):
        bp = BeliefParams(0.0, 1.0, 5.0, 1.0, 1.0)
        assert mixture_density(bp, 0.0) == pytest.approx(0.398942, abs=1e-6)

    def test_two_group_value_against_scipy(self):
        bp = BeliefParams(-3.0, 1.0, 3.0, 1.0, 0.9)
        expected = 0.9 * norm.pdf(-3.0, loc=-3.0, scale=1.0) \
            + 0.1 * norm.pdf(-3.0, loc=3.0, scale=1.0)
        assert mixture_density(bp, -3.0) == pytest.approx(expected, rel=1e-12)
        assert mixture_density(bp, -3.0) == pytest.approx(0.359048, abs=1e-6)

    def test_integrates_to_one(self, default_grid):
        # Components well inside the grid range, so truncated tail mass is
        # negligible next to the trapezoid error budget.
        for bp in (BeliefParams(0.0, 1.0, 0.0, 1.0, 1.0),
                   BeliefParams(-2.0, 0.5, 2.0, 0.75, 0.4)):
            total = np.trapezoid(mixture_density(bp, default_grid.points),
                                 default_grid.points)
            assert abs(total - 1.0) <= 1e-4

    def test_rejects_bad_sigma(self):
        with pytest.raises(InvalidInputError):
            BeliefParams(0.0, -1.0, 0.0, 1.0, 0.5)
        with pytest.raises(InvalidInputError):
            BeliefParams(0.0, 1.0, 0.0, 0.0, 0.5)

    def test_nonnegative_everywhere(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            bp = BeliefParams(rng.uniform(-6, 6), rng.uniform(0.1, 3),
                              rng.uniform(-6, 6), rng.uniform(0.1, 3), rng.uniform(0, 1))
            assert np.all(mixture_density(bp, np.linspace(-10, 10, 101)) >= 0.0)


class TestDiscretizeBelief:
    def test_point_like_mass_concentrates(self, default_grid):
        sigma = default_grid.cell_width / 100.0
        bp = BeliefParams(-3.0, sigma, -3.0, sigma, 0.5)
        b = discretize_belief(bp, default_grid)
        assert b.mass[default_grid.index_of(-3.0)] >= 0.99

    def test_dominant_group_mass(self, default_grid):
        # Exact left-of-zero mass via the normal CDF, compared to grid cells.
        bp = BeliefParams(-3.0, 1.0, 3.0, 1.0, 0.9)
        b = discretize_belief(bp, default_grid)
        grid_mass = float(b.mass[default_grid.points < 0.0].sum())
        exact = 0.9 * norm.cdf(0.0, -3.0, 1.0) + 0.1 * norm.cdf(0.0, 3.0, 1.0)
        assert abs(grid_mass - exact) <= 2e-3
        assert grid_mass == pytest.approx(0.9, abs=5e-3)

    def test_normalization(self, default_grid):
        rng = np.random.default_rng(3)
        for _ in range(100):
            bp = BeliefParams(rng.uniform(-5, 5), rng.uniform(0.05, 3),
                              rng.uniform(-5, 5), rng.uniform(0.05, 3), rng.uniform(0, 1))
            b = discretize_belief(bp, default_grid)
            assert abs(float(b.mass.sum()) - 1.0) <= 1e-9
            assert np.all(b.mass >= 0.0)

    def test_underflow_everywhere_is_an_error(self, default_grid):
        bp = BeliefParams(500.0, 0.01, 500.0, 0.01, 0.5)
        with pytest.raises(DegenerateBeliefError):
            discretize_belief(bp, default_grid)


class TestCanonicalize:
    def test_swap_rule(self):
        bp = canonicalize(BeliefParams(3.0, 1.0, -3.0, 1.0, 0.1))
        assert bp.astuple() == (-3.0, 1.0, 3.0, 1.0, 0.9)

    def test_idempotent(self):
        bp = BeliefParams(-2.0, 0.5, 1.0, 2.0, 0.3)
        assert canonicalize(bp) is bp
        assert canonicalize(canonicalize(bp)) == canonicalize(bp)

    def test_density_pointwise_preserved(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            bp = BeliefParams(rng.uniform(-6, 6), rng.uniform(0.1, 3),
                              rng.uniform(-6, 6), rng.uniform(0.1, 3), rng.uniform(0, 1))
            canon = canonicalize(bp)
            thetas = rng.uniform(-8, 8, size=100)
            d0 = mixture_density(bp, thetas)
            d1 = mixture_density(canon, thetas)
            np.testing.assert_allclose(d0, d1, atol=1e-12)


class TestGridTypes:
    def test_theta_grid_validation(self):
        with pytest.raises(InvalidInputError):
            ThetaGrid(1.0, 1.0, 5)
        with pytest.raises(InvalidInputError):
            ThetaGrid(0.0, 1.0, 2)

    def test_index_of(self, default_grid):
        assert default_grid.index_of(-6.0) == 0
        assert default_grid.index_of(6.0) == 240
        assert default_grid.points[default_grid.index_of(2.0)] == pytest.approx(2.0)
        with pytest.raises(InvalidInputError):
            default_grid.index_of(7.0)

    def test_grid_belief_rejects_bad_mass(self, default_grid):
        bad = np.full(default_grid.n_points, 1.0 / default_grid.n_points)
        bad[0] = -bad[0]
        with pytest.raises(InvalidInputError):
            GridBelief(default_grid, bad)
        with pytest.raises(InvalidInputError):
            GridBelief(default_grid, np.full(default_grid.n_points, 1.0))

    def test_uniform_belief(self, default_grid):
        b = uniform_belief(default_grid)
        assert abs(float(b.mass.sum()) - 1.0) <= 1e-9
        assert float(b.mass.max()) == float(b.mass.min())

    def test_query_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            Query(math.inf, 0.0)
