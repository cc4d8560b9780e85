"""Fixed-period heuristics: random sampling (RS) and proportional sampling (PS).

Both use one transition row for every state and a single defense period
chosen by scanning the tau grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .game_core import DefenseStrategy
from .minmax import W_FLOOR
from .scenario import Scenario

logger = logging.getLogger(__name__)

__all__ = ["BaselineResult", "solve_rs", "solve_ps", "rs_objective", "ps_row", "ps_objective"]


@dataclass
class BaselineResult:
    policy: str
    strategy: DefenseStrategy
    tau_star: float
    objective: float

    @property
    def below_alpha(self) -> float:
        """Smallest transition probability (compare with the scenario's alpha)."""
        return float(self.strategy.P.min())

    def to_dict(self) -> dict:
        d = {"policy": self.policy}
        d.update(self.strategy.to_dict())
        d.update(
            g_lo=self.objective,
            g_hi=self.objective,
            g_est=self.objective,
            iterations=1,
            tau_star=self.tau_star,
        )
        return d


def _stationary_result(policy, row, tau, objective, n) -> BaselineResult:
    P = np.tile(row, (n, 1))
    return BaselineResult(policy, DefenseStrategy(P, np.full(n, tau)), float(tau), float(objective))


def rs_objective(w, M, tau: float) -> float:
    n = len(w)
    return (np.max(w) + np.sum(M) / n) / (n * tau)


def solve_rs(scenario: Scenario) -> BaselineResult:
    grid, W, M, n = scenario.overlaps.grid, scenario.overlaps.entries, scenario.M, scenario.n
    obj = np.array([rs_objective(W[t], M, grid[t]) for t in range(grid.size)])
    t = int(np.argmin(obj))
    return _stationary_result("rs", np.full(n, 1.0 / n), grid[t], obj[t], n)


def ps_row(w) -> np.ndarray:
    """Row with ``w_j p_j`` equal across j and ``sum p = 1``."""
    w = np.asarray(w, dtype=float)
    if np.any(w < W_FLOOR):
        logger.debug("clamping zero overlaps to %g before equalization", W_FLOOR)
    inv = 1.0 / np.maximum(w, W_FLOOR)
    return inv / inv.sum()


def ps_objective(w, M, tau: float) -> tuple[float, np.ndarray]:
    p = ps_row(w)
    return (np.max(np.asarray(w) * p) + p @ M @ p) / tau, p


def solve_ps(scenario: Scenario) -> BaselineResult:
    grid, W, M, n = scenario.overlaps.grid, scenario.overlaps.entries, scenario.M, scenario.n
    best = None
    for t in range(grid.size):
        obj, p = ps_objective(W[t], M, grid[t])
        if best is None or obj < best[0]:
            best = (obj, p, grid[t])
    obj, p, tau = best
    if p.min() < scenario.alpha:
        logger.info("PS row leaves the alpha-floored class (min p = %.3g)", p.min())
    return _stationary_result("ps", p, tau, obj, n)
