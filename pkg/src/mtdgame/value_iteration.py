"""Average-cost value iteration over the transformed MDP.

Each sweep solves, for every state ``i`` and every period on the tau grid,
the inner Min-Max problem and keeps the best ``(p, tau)``.  Iteration stops
once the per-state increments ``d_i = V^t(i) - V^{t-1}(i)`` agree up to a
relative span ``omega``; the increments then bracket the optimal
time-average cost.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import NonConvergence, PreconditionError
from .game_core import DefenseStrategy
from .minmax import check_alpha, clamp_overlaps, solve_inner_batch
from .scenario import Scenario

logger = logging.getLogger(__name__)

__all__ = ["SolveReport", "value_iteration", "normalize_values", "check_scenario_alpha"]


@dataclass
class SolveReport:
    strategy: DefenseStrategy
    g_lo: float
    g_hi: float
    g_est: float
    iterations: int
    V: np.ndarray
    # False when alpha <= 1/(n*rho) failed somewhere on the grid and the
    # solve ran in relaxed mode
    rho_ok: bool = True

    def to_dict(self) -> dict:
        d = self.strategy.to_dict()
        d.update(g_lo=self.g_lo, g_hi=self.g_hi, g_est=self.g_est, iterations=self.iterations)
        return d


def normalize_values(V) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    return V - V.min()


def check_scenario_alpha(scenario: Scenario) -> None:
    """Raise `PreconditionError` naming the first grid period that breaks alpha <= 1/(n*rho)."""
    W = clamp_overlaps(scenario.overlaps.entries)
    for tau, w in zip(scenario.overlaps.grid, W):
        try:
            check_alpha(w, scenario.alpha)
        except PreconditionError as exc:
            raise PreconditionError(f"at tau={tau:g}: {exc}") from None


def value_iteration(
    scenario: Scenario,
    max_iter: int = 10_000,
    normalize_every: int | None = 100,
    strict: bool = True,
) -> SolveReport:
    """Solve the defender's problem on the scenario's tau grid.

    With ``strict=False`` a violated alpha condition is logged instead of
    raised; the result is then the best policy within the structured
    candidate family, which may be suboptimal at the offending periods.
    """
    n = scenario.n
    taus = scenario.overlaps.grid
    W = clamp_overlaps(scenario.overlaps.entries)  # (T, n)
    gamma, alpha, omega = scenario.gamma, scenario.alpha, scenario.omega
    M = scenario.M
    if gamma > taus[0] + 1e-12:
        raise PreconditionError(f"gamma={gamma} exceeds the smallest period {taus[0]}")

    rho_ok = True
    try:
        check_scenario_alpha(scenario)
    except PreconditionError as exc:
        if strict:
            raise
        rho_ok = False
        logger.warning("relaxed solve: %s", exc)

    scale = (1.0 - gamma / taus)[:, None]  # (T, 1)
    V = np.zeros(n)
    span = np.inf
    for t in range(1, max_iter + 1):
        theta = M + gamma * V[None, :]  # (n_states, n)
        p, u = solve_inner_batch(W[:, None, :], theta[None, :, :], alpha, strict=False)
        values = u / taus[:, None] + scale * V[None, :]  # (T, n_states)
        best = np.argmin(values, axis=0)  # first minimum -> smallest tau
        states = np.arange(n)
        V_new = values[best, states]
        if not np.all(np.isfinite(V_new)):
            bad = int(np.flatnonzero(~np.isfinite(V_new))[0])
            raise PreconditionError(f"no feasible structured row for state {bad} at any tau")

        d = V_new - V
        if np.any(d < 0) and t > 1:
            logger.warning("negative value increment %.3g at iteration %d", d.min(), t)
        hi, lo = np.max(np.abs(d)), np.min(np.abs(d))
        span = hi - lo
        converged = span < omega * lo or span == 0.0
        if converged or t == max_iter:
            strategy = DefenseStrategy(p[best, states], taus[best])
            if not converged:
                raise NonConvergence(
                    f"no convergence after {max_iter} iterations (span {span:.3g})",
                    span=span,
                    iterations=t,
                )
            return SolveReport(
                strategy=strategy,
                g_lo=float(lo),
                g_hi=float(hi),
                g_est=float(np.mean(d)),
                iterations=t,
                V=V_new,
                rho_ok=rho_ok,
            )
        V = V_new
        if normalize_every and t % normalize_every == 0:
            V = normalize_values(V)
    raise NonConvergence(f"max_iter must be >= 1, got {max_iter}", span=span, iterations=0)
