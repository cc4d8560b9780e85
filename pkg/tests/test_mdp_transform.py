import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtdgame.attack_models import OverlapTable
from mtdgame.exceptions import ValidationError
from mtdgame.game_core import DefenseStrategy, stage_cost, stationary_distribution
from mtdgame.mdp_transform import (
    transformed_chain,
    transformed_stage_cost,
    transformed_transition,
    verify_equivalence,
)

from conftest import random_scenario, random_strategy


def test_transformed_stage_cost_examples():
    t = OverlapTable([1.0, 2.0], [[0.5], [0.5]])
    assert transformed_stage_cost(0, [1.0], 2.0, [[1.0]], t) == pytest.approx(0.75)
    assert transformed_stage_cost(0, [1.0], 1.0, [[1.0]], t) == stage_cost(0, [1.0], 1.0, [[1.0]], t)
    t2 = OverlapTable([0.5], [[0.2, 3.0]])
    M = [[1.0, 2.0], [0.0, 0.0]]
    assert transformed_stage_cost(0, [0.99, 0.01], 0.5, M, t2) == pytest.approx(2.416)


def test_transformed_transition_examples():
    p = np.array([0.3, 0.7])
    np.testing.assert_array_equal(transformed_transition(p, 0.4, 0.4, 0), p)
    np.testing.assert_array_equal(transformed_transition([1.0], 3.0, 0.1, 0), [1.0])
    # 1 * (0.5 - 1) / 2 + 1 = 0.75 and 1 * 0.5 / 2 = 0.25
    np.testing.assert_allclose(transformed_transition([0.5, 0.5], 2.0, 1.0, 0), [0.75, 0.25])


def test_gamma_larger_than_period_rejected():
    with pytest.raises(ValidationError):
        transformed_transition([0.5, 0.5], 1.0, 2.0, 0)
    with pytest.raises(ValidationError):
        transformed_transition([0.5, 0.5], 1.0, 0.0, 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.floats(0.1, 5.0), st.floats(0.01, 1.0))
def test_transformed_row_properties(n, seed, tau, gamma_frac):
    rng = np.random.default_rng(seed)
    alpha = 0.5 / n
    p = alpha + (1 - n * alpha) * rng.dirichlet(np.ones(n))
    gamma = gamma_frac * tau
    i = int(rng.integers(n))
    row = transformed_transition(p, tau, gamma, i)
    assert abs(row.sum() - 1.0) <= 1e-12
    assert np.all(row > 0)


def test_single_configuration_equivalence():
    s = DefenseStrategy([[1.0]], [2.0])
    g_semi, g_mdp = verify_equivalence(s, [[1.0]], OverlapTable([2.0], [[0.5]]), 0.5)
    assert g_semi == pytest.approx(0.75) and g_mdp == pytest.approx(0.75)


def test_equal_periods_keep_stationary_distribution(rng):
    sc = random_scenario(rng, n=4)
    s = random_strategy(rng, sc)
    s = DefenseStrategy(s.P, np.full(4, sc.tau_min))
    np.testing.assert_allclose(
        stationary_distribution(transformed_chain(s, sc.gamma)), stationary_distribution(s.P), atol=1e-10
    )
    g_semi, g_mdp = verify_equivalence(s, sc.M, sc.overlaps, sc.gamma)
    assert abs(g_semi - g_mdp) <= 1e-9 * max(1.0, g_semi)


def test_equivalence_on_random_strategies(rng):
    for _ in range(100):
        sc = random_scenario(rng)
        s = random_strategy(rng, sc)
        g_semi, g_mdp = verify_equivalence(s, sc.M, sc.overlaps, sc.gamma)
        assert abs(g_semi - g_mdp) <= 1e-9 * max(1.0, g_semi)
