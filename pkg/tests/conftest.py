import numpy as np
import pytest

from mtdgame.attack_models import DeterministicAttack, ExponentialAttack, build_overlap_table
from mtdgame.game_core import DefenseStrategy
from mtdgame.scenario import Scenario, generate_scenario

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report_criterion():
    def record(number, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def random_strategy(rng, scenario, alpha=None):
    """Alpha-floored random rows and random grid periods."""
    n = scenario.n
    alpha = scenario.alpha if alpha is None else alpha
    P = alpha + (1 - n * alpha) * rng.dirichlet(np.ones(n), size=n)
    tau = rng.choice(scenario.tau_grid, size=n)
    return DefenseStrategy(P, tau)


def random_scenario(rng, n=None, **kw):
    n = int(rng.integers(2, 7)) if n is None else n
    return generate_scenario(n, (0.0, 1.5), (0.5, 2.0), int(rng.integers(2**31)), **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def one_config_table():
    """n = 1 table with w = 0.5 at tau = 2 (deterministic attack time 1.5)."""
    return build_overlap_table([DeterministicAttack(1.5)], [1.0, 2.0])


@pytest.fixture
def small_scenario():
    M = np.array([[0.2, 1.0, 0.5], [0.7, 0.1, 1.2], [0.4, 0.9, 0.3]])
    models = [ExponentialAttack(1.0), ExponentialAttack(0.7), ExponentialAttack(1.6)]
    return Scenario(M, models, seed=3)
