"""Configuration space, defender strategies and exact policy evaluation.

A stationary defense strategy is a pair ``(P, tau)``: row ``P[i]`` is the
distribution of the next configuration when the current one is ``i`` and
``tau[i]`` is the length of the period that follows.  Against the myopic
attacker the expected cost of a period started from ``i`` is

    c_i = max_j P[i, j] * w_j(tau_i) + sum_j P[i, j] * M[i, j]

and, for a unichain ``P``, the time-average cost is the renewal-reward
ratio ``sum_i pi_i c_i / sum_i pi_i tau_i``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .attack_models import OverlapTable
from .exceptions import ValidationError

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-9
FLOOR_TOL = 1e-12

__all__ = [
    "DefenseStrategy",
    "PolicyCost",
    "as_migration_matrix",
    "stage_cost",
    "attacker_best_response",
    "stationary_distribution",
    "evaluate_policy",
]


def as_migration_matrix(M) -> np.ndarray:
    """Validate and return the migration-cost matrix as a float array."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValidationError(f"migration matrix must be square and nonempty, got shape {M.shape}", "M")
    if not np.all(np.isfinite(M)) or np.any(M < 0):
        raise ValidationError("migration costs must be finite and nonnegative", "M")
    return M


def _check_stochastic(P: np.ndarray, name: str = "P") -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise ValidationError(f"transition matrix must be square, got shape {P.shape}", name)
    if not np.all(np.isfinite(P)) or np.any(P < -FLOOR_TOL) or np.any(P > 1 + FLOOR_TOL):
        raise ValidationError("transition probabilities must lie in [0, 1]", name)
    dev = np.max(np.abs(P.sum(axis=1) - 1.0))
    if dev > ROW_SUM_TOL:
        raise ValidationError(f"rows must sum to 1 (max deviation {dev:.3g})", name)
    return P


@dataclass
class DefenseStrategy:
    P: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)
        self.tau = np.asarray(self.tau, dtype=float).reshape(-1)
        _check_stochastic(self.P)
        if self.tau.size != self.P.shape[0]:
            raise ValidationError("tau must have one entry per configuration", "tau")
        if np.any(~np.isfinite(self.tau)) or np.any(self.tau <= 0):
            raise ValidationError("defense periods must be positive", "tau")

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def validate(self, alpha: float | None = None, tau_bounds: tuple | None = None) -> "DefenseStrategy":
        """Check the alpha floor and period bounds; returns self for chaining."""
        if alpha is not None and np.min(self.P) < alpha - FLOOR_TOL:
            raise ValidationError(f"entry {np.min(self.P):.6g} below the floor alpha={alpha}", "P")
        if tau_bounds is not None:
            lo, hi = tau_bounds
            if np.any(self.tau < lo - FLOOR_TOL) or np.any(self.tau > hi + FLOOR_TOL):
                raise ValidationError(f"defense periods must lie in [{lo}, {hi}]", "tau")
        return self

    def to_dict(self) -> dict:
        return {"P": self.P.tolist(), "tau": self.tau.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DefenseStrategy":
        for key in ("P", "tau"):
            if key not in d:
                raise ValidationError("missing field", key)
        return cls(np.array(d["P"], dtype=float), np.array(d["tau"], dtype=float))


@dataclass
class PolicyCost:
    pi: np.ndarray
    c: np.ndarray
    g: float


def stage_cost(i: int, p_row, tau_i: float, M, overlaps: OverlapTable) -> float:
    """Expected attack loss plus expected migration cost of one period from `i`."""
    p = np.asarray(p_row, dtype=float)
    w = overlaps.lookup(tau_i)
    M = np.asarray(M, dtype=float)
    return float(np.max(p * w) + p @ M[i])


def attacker_best_response(i: int, p_row, tau_i: float, overlaps: OverlapTable) -> int:
    """Configuration the myopic attacker targets; ties go to the smallest index.

    `i` is accepted for symmetry with `stage_cost`; the response depends on
    the previous configuration only through `p_row` and `tau_i`.
    """
    p = np.asarray(p_row, dtype=float)
    return int(np.argmax(p * overlaps.lookup(tau_i)))


def stationary_distribution(P, tol: float = 1e-12, max_iter: int = 1_000_000) -> np.ndarray:
    """Stationary vector of a row-stochastic matrix.

    Power iteration until ``||pi P - pi||_inf <= tol``; if that fails within
    `max_iter` steps, solve ``(P^T - I) pi = 0, sum(pi) = 1`` directly.
    """
    P = _check_stochastic(P)
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ P
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) <= tol:
            return nxt
        pi = nxt
    logger.debug("power iteration did not reach %.1e; using direct solve", tol)
    A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def stage_costs(strategy: DefenseStrategy, M, overlaps: OverlapTable) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return np.array([stage_cost(i, strategy.P[i], strategy.tau[i], M, overlaps) for i in range(strategy.n)])


def evaluate_policy(strategy: DefenseStrategy, M, overlaps: OverlapTable) -> PolicyCost:
    """Exact time-average cost of `strategy` (independent of the start state)."""
    M = as_migration_matrix(M)
    if M.shape[0] != strategy.n or overlaps.n != strategy.n:
        raise ValidationError("strategy, migration matrix and overlap table sizes differ", "P")
    c = stage_costs(strategy, M, overlaps)
    pi = stationary_distribution(strategy.P)
    g = float(pi @ c / (pi @ strategy.tau))
    return PolicyCost(pi=pi, c=c, g=g)
