"""Monte Carlo playout of the defender/attacker game.

Random draws per period, in order: one uniform for the next configuration,
then, only if the attacker guessed that configuration, one attack time.
The initial configuration is drawn first (uniformly) unless given.
"""

from __future__ import annotations

import bisect
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .game_core import DefenseStrategy, attacker_best_response
from .scenario import Scenario

__all__ = ["SimResult", "simulate", "replicate", "trial_rng"]


@dataclass
class SimResult:
    periods: int
    total_time: float
    total_migration_cost: float
    total_compromised_time: float
    # per-configuration diagnostics
    visits: np.ndarray = field(repr=False)
    guesses_correct: np.ndarray = field(repr=False)

    @property
    def empirical_cost(self) -> float:
        return (self.total_migration_cost + self.total_compromised_time) / self.total_time

    @property
    def compromised_fraction(self) -> float:
        return self.total_compromised_time / self.total_time

    def to_row(self) -> dict:
        return {
            "periods": self.periods,
            "total_time": self.total_time,
            "total_migration_cost": self.total_migration_cost,
            "total_compromised_time": self.total_compromised_time,
            "empirical_cost": self.empirical_cost,
            "compromised_fraction": self.compromised_fraction,
        }


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def simulate(
    strategy: DefenseStrategy,
    scenario: Scenario,
    horizon: int,
    rng: np.random.Generator,
    initial_state: int | None = None,
) -> SimResult:
    """Play `horizon` defense periods and accumulate time, migration cost and loss.

    `visits[i]` counts periods that started in configuration i and
    `guesses_correct[i]` how many of those the attacker guessed right.
    """
    if horizon < 1:
        raise ValidationError("horizon must be >= 1", "horizon")
    n = strategy.n
    if n != scenario.n:
        raise ValidationError("strategy and scenario sizes differ", "P")
    overlaps = scenario.overlaps
    targets = [attacker_best_response(i, strategy.P[i], strategy.tau[i], overlaps) for i in range(n)]
    cdf = [np.cumsum(row).tolist() for row in strategy.P]
    for row in cdf:
        row[-1] = 1.0
    tau = strategy.tau.tolist()
    M = scenario.M.tolist()
    models = scenario.attack_models

    state = int(rng.integers(n)) if initial_state is None else int(initial_state)
    visits = [0] * n
    hits = [0] * n
    total_time = migration = compromised = 0.0
    for _ in range(horizon):
        i = state
        visits[i] += 1
        j = bisect.bisect_right(cdf[i], rng.random())
        if j >= n:
            j = n - 1
        guess = targets[i]
        if guess == j:
            hits[i] += 1
            a = float(models[j].sample(rng))
            if a < tau[i]:
                compromised += tau[i] - a
        total_time += tau[i]
        migration += M[i][j]
        state = j
    return SimResult(
        periods=horizon,
        total_time=total_time,
        total_migration_cost=migration,
        total_compromised_time=compromised,
        visits=np.array(visits),
        guesses_correct=np.array(hits),
    )


def _run_trial(args):
    strategy, scenario, horizon, seed, trial = args
    return simulate(strategy, scenario, horizon, trial_rng(seed, trial))


def replicate(
    strategy: DefenseStrategy,
    scenario: Scenario,
    horizon: int,
    trials: int,
    seed: int,
    workers: int = 1,
) -> list[SimResult]:
    """Independent trials; trial `t` uses ``trial_rng(seed, t)``."""
    if trials < 1:
        raise ValidationError("trials must be >= 1", "trials")
    jobs = [(strategy, scenario, horizon, seed, t) for t in range(trials)]
    if workers <= 1:
        return [_run_trial(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_trial, jobs))
