import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtdgame.attack_models import DeterministicAttack, ExponentialAttack, expected_overlap
from mtdgame.exceptions import NonConvergence, PreconditionError
from mtdgame.game_core import evaluate_policy
from mtdgame.scenario import DEFAULTS, Scenario
from mtdgame.value_iteration import normalize_values, value_iteration

from conftest import random_scenario


def grid_oracle(rate, m, grid):
    """Brute-force 1-D minimum of (w(tau) + m) / tau over the grid."""
    best = np.inf
    for tau in grid:
        best = min(best, (expected_overlap(ExponentialAttack(rate), tau) + m) / tau)
    return best


def test_single_configuration_exponential():
    sc = Scenario([[1.0]], [ExponentialAttack(1.0)], alpha=1.0)
    rep = value_iteration(sc)
    # the grid minimum sits at the upper end: 1 + exp(-5) / 5
    assert rep.g_est == pytest.approx(1.0013475893998171, abs=1e-12)
    assert rep.g_est == pytest.approx(grid_oracle(1.0, 1.0, sc.tau_grid), abs=1e-12)
    assert rep.strategy.tau[0] == 5.0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.0, 2.0))
def test_single_configuration_matches_grid_oracle(rate, m):
    sc = Scenario([[m]], [ExponentialAttack(rate)], alpha=1.0)
    assert abs(value_iteration(sc).g_est - grid_oracle(rate, m, sc.tau_grid)) <= 1e-9


def test_zero_cost_game():
    sc = Scenario(np.zeros((3, 3)), [DeterministicAttack(6.0)] * 3)
    rep = value_iteration(sc)
    assert abs(rep.g_est) <= 1e-9


def test_default_parameters():
    assert DEFAULTS == dict(alpha=0.01, omega=0.01, tau_min=0.1, tau_max=5.0, delta=0.1)
    sc = Scenario([[1.0]], [ExponentialAttack(1.0)])
    assert (sc.alpha, sc.omega, sc.tau_min, sc.tau_max, sc.delta, sc.gamma) == (0.01, 0.01, 0.1, 5.0, 0.1, 0.1)


def test_normalize_values():
    np.testing.assert_array_equal(normalize_values([3, 5]), [0, 2])
    np.testing.assert_array_equal(normalize_values([0, 0]), [0, 0])


def test_normalization_does_not_change_result(small_scenario):
    a = value_iteration(small_scenario, normalize_every=1)
    b = value_iteration(small_scenario, normalize_every=None)
    np.testing.assert_allclose(a.strategy.P, b.strategy.P, atol=1e-12)
    np.testing.assert_array_equal(a.strategy.tau, b.strategy.tau)
    assert a.g_est == pytest.approx(b.g_est, abs=1e-9)
    assert a.iterations == b.iterations


def test_bracket_and_invariants(rng):
    for _ in range(3):
        sc = random_scenario(rng, n=4, alpha=0.005)
        rep = value_iteration(sc)
        assert rep.g_lo <= rep.g_est <= rep.g_hi
        assert rep.g_hi - rep.g_lo < sc.omega * rep.g_lo
        rep.strategy.validate(alpha=sc.alpha, tau_bounds=(sc.tau_min, sc.tau_max))
        g = evaluate_policy(rep.strategy, sc.M, sc.overlaps).g
        assert rep.g_lo * (1 - 1e-6) <= g <= rep.g_hi * (1 + 1e-6)


def test_deterministic_serialization(small_scenario):
    a = json.dumps(value_iteration(small_scenario).to_dict())
    b = json.dumps(value_iteration(Scenario.from_dict(small_scenario.to_dict())).to_dict())
    assert a == b
    assert set(json.loads(a)) == {"P", "tau", "g_lo", "g_hi", "g_est", "iterations"}


def test_iteration_cap(small_scenario):
    with pytest.raises(NonConvergence) as info:
        value_iteration(small_scenario, max_iter=1)
    assert info.value.iterations == 1 and info.value.span > 0


def test_alpha_precondition_names_tau():
    sc = Scenario(np.ones((2, 2)), [ExponentialAttack(1.0), ExponentialAttack(5.0)], alpha=0.4)
    with pytest.raises(PreconditionError, match="tau=0.1"):
        value_iteration(sc)
    rep = value_iteration(sc, strict=False)
    assert not rep.rho_ok
    rep.strategy.validate(alpha=0.4)
