"""Semi-MDP to discrete-time MDP transformation.

With a constant ``0 < gamma <= min_i tau_i`` the transformed chain

    c~_i  = c_i / tau_i
    p~_ij = gamma * (p_ij - [i == j]) / tau_i + [i == j]

has the same average cost per step as the original semi-MDP has per unit
time.
"""

from __future__ import annotations

import numpy as np

from .attack_models import OverlapTable
from .exceptions import ValidationError
from .game_core import DefenseStrategy, evaluate_policy, stage_cost, stationary_distribution


def transformed_stage_cost(i: int, p_row, tau_i: float, M, overlaps: OverlapTable) -> float:
    return stage_cost(i, p_row, tau_i, M, overlaps) / tau_i


def transformed_transition(p_row, tau_i: float, gamma: float, i: int) -> np.ndarray:
    if not gamma > 0:
        raise ValidationError(f"gamma must be positive, got {gamma}", "gamma")
    if gamma > tau_i:
        raise ValidationError(f"gamma={gamma} exceeds tau_i={tau_i}", "gamma")
    p = np.asarray(p_row, dtype=float)
    out = (gamma / tau_i) * p
    out[i] += 1.0 - gamma / tau_i
    return out


def transformed_chain(strategy: DefenseStrategy, gamma: float) -> np.ndarray:
    return np.vstack(
        [transformed_transition(strategy.P[i], strategy.tau[i], gamma, i) for i in range(strategy.n)]
    )


def verify_equivalence(strategy: DefenseStrategy, M, overlaps: OverlapTable, gamma: float):
    """Return ``(g_semi, g_mdp)`` computed along independent routes."""
    g_semi = evaluate_policy(strategy, M, overlaps).g
    c_tilde = np.array(
        [transformed_stage_cost(i, strategy.P[i], strategy.tau[i], M, overlaps) for i in range(strategy.n)]
    )
    pi_tilde = stationary_distribution(transformed_chain(strategy, gamma))
    return g_semi, float(pi_tilde @ c_tilde)
