import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtdgame.attack_models import (
    DeterministicAttack,
    EmpiricalAttack,
    ExponentialAttack,
    attack_model_from_dict,
    build_overlap_table,
    estimate_overlap_table,
    expected_overlap,
    make_tau_grid,
    sample_attack_time,
)
from mtdgame.exceptions import GridLookupError, ValidationError

# midpoint-rule value of int_0^1 (1 - a) e^{-a} da at step 1e-6, frozen
EXP1_OVERLAP = 0.36787944117144233


def quadrature_overlap(rate, tau, step=1e-6):
    a = (np.arange(int(round(tau / step))) + 0.5) * step
    return float(np.sum((tau - a) * rate * np.exp(-rate * a)) * step)


def test_quadrature_oracle_matches_frozen_value():
    assert quadrature_overlap(1.0, 1.0) == pytest.approx(EXP1_OVERLAP, abs=1e-11)


def test_exponential_closed_form():
    assert expected_overlap(ExponentialAttack(1.0), 1.0) == pytest.approx(EXP1_OVERLAP, abs=1e-14)


@pytest.mark.parametrize("rate,tau", [(0.5, 3.0), (2.0, 0.1), (7.0, 1.3)])
def test_exponential_against_quadrature(rate, tau):
    assert expected_overlap(ExponentialAttack(rate), tau) == pytest.approx(
        quadrature_overlap(rate, tau), abs=1e-10
    )


@pytest.mark.parametrize(
    "model", [ExponentialAttack(3.0), DeterministicAttack(0.4), EmpiricalAttack((0.1, 2.0))]
)
def test_zero_period_has_no_overlap(model):
    assert expected_overlap(model, 0.0) == 0.0


def test_deterministic_cases():
    assert expected_overlap(DeterministicAttack(2.0), 1.0) == 0.0
    assert expected_overlap(DeterministicAttack(0.5), 1.0) == 0.5


def test_empirical_is_plug_in_mean():
    m = EmpiricalAttack([0.0, 0.5, 3.0])
    assert expected_overlap(m, 1.0) == pytest.approx((1.0 + 0.5 + 0.0) / 3)


def test_negative_tau_rejected():
    with pytest.raises(ValidationError):
        expected_overlap(ExponentialAttack(1.0), -0.1)


@pytest.mark.parametrize(
    "factory",
    [lambda: ExponentialAttack(0.0), lambda: DeterministicAttack(-1.0), lambda: EmpiricalAttack(()),
     lambda: EmpiricalAttack((1.0, -2.0))],
)
def test_invalid_models(factory):
    with pytest.raises(ValidationError):
        factory()


def test_sampling():
    assert sample_attack_time(DeterministicAttack(2.0), np.random.default_rng(1)) == 2.0
    m = ExponentialAttack(1.0)
    a = sample_attack_time(m, np.random.default_rng(42))
    assert a == sample_attack_time(m, np.random.default_rng(42))
    draws = m.sample(np.random.default_rng(0), 100_000)
    assert abs(draws.mean() - 1.0) <= 3 / math.sqrt(100_000)
    emp = EmpiricalAttack((0.25, 4.0))
    assert set(emp.sample(np.random.default_rng(0), 50)) == {0.25, 4.0}


def test_build_table_examples():
    table = build_overlap_table([ExponentialAttack(1.0)], [0.0, 1.0])
    np.testing.assert_allclose(table.entries[:, 0], [0.0, EXP1_OVERLAP], atol=1e-14)
    table = build_overlap_table([ExponentialAttack(1.0), DeterministicAttack(0.3)], [0.0])
    np.testing.assert_array_equal(table.entries, [[0.0, 0.0]])
    table = build_overlap_table([DeterministicAttack(0.0)], [0.5, 1.0])
    np.testing.assert_array_equal(table.entries[:, 0], [0.5, 1.0])


def test_table_lookup_is_exact():
    table = build_overlap_table([DeterministicAttack(0.0)], make_tau_grid(0.1, 5.0, 0.1))
    assert table.lookup(0.3)[0] == pytest.approx(0.3)
    with pytest.raises(GridLookupError):
        table.lookup(0.35)
    with pytest.raises(GridLookupError):
        table.lookup(9.0)


@pytest.mark.parametrize("grid", [[1.0, 0.5], [0.5, 0.5], [-1.0, 0.0], []])
def test_bad_grid(grid):
    with pytest.raises(ValidationError):
        build_overlap_table([DeterministicAttack(0.0)], grid)


def test_estimate_examples():
    rng = np.random.default_rng(11)
    est = estimate_overlap_table([ExponentialAttack(1.0)], [1.0], 500, rng).entries[0, 0]
    draws = ExponentialAttack(1.0).sample(np.random.default_rng(11), 500)
    se = np.std(np.maximum(1.0 - draws, 0.0), ddof=1) / math.sqrt(500)
    assert abs(est - EXP1_OVERLAP) <= 4 * se
    assert estimate_overlap_table([DeterministicAttack(2.0)], [1.0], 17, rng).entries[0, 0] == 0.0
    assert estimate_overlap_table([DeterministicAttack(0.0)], [1.0], 1, rng).entries[0, 0] == 1.0
    with pytest.raises(ValidationError):
        estimate_overlap_table([DeterministicAttack(0.0)], [1.0], 0, rng)


def test_estimate_converges_on_random_pairs():
    rng = np.random.default_rng(5)
    count = 500
    for _ in range(100):
        rate, tau = rng.uniform(0.2, 5.0), rng.uniform(0.05, 5.0)
        m = ExponentialAttack(rate)
        sub = np.random.default_rng(rng.integers(2**32))
        est = estimate_overlap_table([m], [tau], count, sub).entries[0, 0]
        draws = m.sample(np.random.default_rng(0), 20_000)
        sd = np.std(np.maximum(tau - draws, 0.0))
        assert abs(est - m.expected_overlap(tau)) <= 4 * sd / math.sqrt(count)


def test_tau_grid():
    grid = make_tau_grid(0.1, 5.0, 0.1)
    assert grid.size == 50 and grid[0] == 0.1 and grid[-1] == 5.0
    assert 0.3 in grid and 2.7 in grid
    np.testing.assert_allclose(make_tau_grid(0.1, 1.0, 0.4), [0.1, 0.5, 0.9, 1.0])
    np.testing.assert_array_equal(make_tau_grid(2.0, 2.0, 0.1), [2.0])


def test_serialization_round_trip():
    for m in (ExponentialAttack(1.5), DeterministicAttack(2.0), EmpiricalAttack((0.5, 1.0))):
        assert attack_model_from_dict(m.to_dict()) == m
    assert ExponentialAttack(2.0).to_dict() == {"type": "exponential", "rate": 2.0}
    with pytest.raises(ValidationError, match="attack_models"):
        attack_model_from_dict({"type": "weibull", "shape": 2})
    with pytest.raises(ValidationError, match="rate"):
        attack_model_from_dict({"type": "exponential"})
    with pytest.raises(ValidationError):
        attack_model_from_dict({"type": "exponential", "rate": -3})


models = st.one_of(
    st.floats(0.05, 20.0).map(ExponentialAttack),
    st.floats(0.0, 6.0).map(DeterministicAttack),
    st.lists(st.floats(0.0, 6.0), min_size=1, max_size=20).map(lambda s: EmpiricalAttack(tuple(s))),
)
taus = st.floats(0.0, 10.0)


@given(models, taus)
def test_overlap_bounds(model, tau):
    w = expected_overlap(model, tau)
    assert 0.0 <= w <= tau + 1e-15


@given(models, taus, taus)
def test_overlap_monotone_and_lipschitz(model, t1, t2):
    lo, hi = sorted((t1, t2))
    w_lo, w_hi = expected_overlap(model, lo), expected_overlap(model, hi)
    assert w_lo <= w_hi + 1e-12
    assert w_hi - w_lo <= hi - lo + 1e-12


@settings(max_examples=200)
@given(st.one_of(models.filter(lambda m: not isinstance(m, DeterministicAttack))), taus)
def test_overlap_jensen_lower_bound(model, tau):
    assert expected_overlap(model, tau) >= max(0.0, tau - model.mean) - 1e-12


@given(st.floats(0.05, 20.0), taus)
def test_closed_form_table_matches_scalar(rate, tau):
    m = ExponentialAttack(rate)
    table = build_overlap_table([m], [tau])
    assert table.entries[0, 0] == expected_overlap(m, tau)
