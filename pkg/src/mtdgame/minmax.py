"""Inner Min-Max problem of the value-iteration step.

For one state and one defense period the defender solves

    min_p  U(p) = max_j w_j p_j + sum_j theta_j p_j
    s.t.   alpha <= p_j <= 1,  sum_j p_j = 1

with ``theta_j = m_j + gamma * V(j)``.  When ``alpha <= 1/(n*rho)``
(``rho = max w / min w``) some optimum has a simple form: pick the
configuration ``k`` that attains the max term, floor every ``a`` with
``theta_a > w_k + theta_k`` at alpha, sort the remaining configurations by
theta and equalize a prefix of them (``w_j p_j = w_k p_k``), flooring the
rest.  Enumerating every anchor ``k`` and prefix length ``q`` costs
``O(n^2 log n)``.

`solve_inner` is the per-instance implementation, `solve_inner_batch` the
vectorized equivalent used by value iteration, and `oracle_solve_inner` an
independent brute-force check.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .attack_models import OverlapTable
from .exceptions import DomainError, PreconditionError, ValidationError

logger = logging.getLogger(__name__)

W_FLOOR = 1e-12
FEAS_TOL = 1e-12
SUM_TOL = 1e-9

__all__ = [
    "InnerProblem",
    "InnerSolution",
    "overlap_ratio",
    "clamp_overlaps",
    "theta_coefficients",
    "inner_objective",
    "solve_inner",
    "solve_inner_batch",
    "oracle_solve_inner",
    "solve_bellman_update",
    "check_structure",
    "grid_bound",
]


def overlap_ratio(w) -> float:
    w = np.asarray(w, dtype=float)
    return float(np.max(w) / np.min(w))


def clamp_overlaps(w) -> np.ndarray:
    """Replace zero overlaps by a tiny positive value so that rho is defined."""
    w = np.asarray(w, dtype=float)
    if np.any(w < W_FLOOR):
        logger.debug("clamping %d zero overlaps to %g", int(np.sum(w < W_FLOOR)), W_FLOOR)
    return np.maximum(w, W_FLOOR)


def check_alpha(w, alpha: float) -> None:
    """Raise unless every sample of w satisfies ``alpha * n * rho <= 1``.

    `w` may be a single vector or a stack of vectors (last axis = configs).
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    n = w.shape[-1]
    rho = w.max(axis=-1) / w.min(axis=-1)
    bad = np.flatnonzero(alpha * n * rho > 1 + 1e-12)
    if bad.size:
        r = float(rho.reshape(-1)[bad[0]])
        raise PreconditionError(
            f"alpha={alpha} exceeds 1/(n*rho) = {1 / (n * r):.6g} (n={n}, rho={r:.6g})"
        )


@dataclass
class InnerProblem:
    w: np.ndarray
    theta: np.ndarray
    alpha: float
    strict: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float).reshape(-1)
        self.theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if self.w.shape != self.theta.shape:
            raise ValidationError("w and theta must have the same length", "theta")
        if np.any(self.w <= 0):
            raise DomainError("all overlaps w_j must be positive; clamp zeros before solving")
        if not (0 < self.alpha and self.alpha * self.n <= 1 + 1e-12):
            raise ValidationError(f"alpha must lie in (0, 1/n], got {self.alpha}", "alpha")
        if self.strict:
            check_alpha(self.w, self.alpha)

    @property
    def n(self) -> int:
        return self.w.size

    @property
    def rho(self) -> float:
        return overlap_ratio(self.w)


@dataclass
class InnerSolution:
    p: np.ndarray
    u: float
    anchor: int = -1
    q: int = -1


def theta_coefficients(m_row, gamma: float, V) -> np.ndarray:
    m_row = np.asarray(m_row, dtype=float)
    V = np.asarray(V, dtype=float)
    if m_row.shape != V.shape:
        raise ValidationError(f"dimension mismatch: m has {m_row.shape}, V has {V.shape}", "V")
    return m_row + gamma * V


def inner_objective(p, w, theta) -> float:
    p = np.asarray(p, dtype=float)
    return float(np.max(w * p) + theta @ p)


def _lex_less(a: np.ndarray, b: np.ndarray) -> bool:
    diff = np.flatnonzero(a != b)
    return bool(diff.size and a[diff[0]] < b[diff[0]])


def _feasible(p, k, w, alpha) -> bool:
    if np.min(p) < alpha - FEAS_TOL or abs(p.sum() - 1.0) > SUM_TOL:
        return False
    # the anchor must attain the max term
    return w[k] * p[k] >= np.max(w * p) * (1 - FEAS_TOL)


def solve_inner(problem: InnerProblem, normalization: str = "inclusive") -> InnerSolution:
    """Structured enumeration over anchors ``k`` and prefix lengths ``q``.

    ``normalization="exclusive"`` sums the equalized ratios over ``j < q`` instead:
    ``(1 - |A| alpha - (|B| - q + 1) alpha) / (1 + sum_{j<q} w_k / w_{b_j})``
    for testing; those candidates rarely sum to one and most are rejected.
    """
    if normalization not in ("inclusive", "exclusive"):
        raise ValueError(f"unknown normalization {normalization!r}")
    w, theta, alpha, n = problem.w, problem.theta, problem.alpha, problem.n
    best = None
    for k in range(n):
        threshold = w[k] + theta[k]
        others = [j for j in range(n) if j != k]
        n_a = sum(1 for a in others if theta[a] > threshold)
        B = sorted((b for b in others if theta[b] <= threshold), key=lambda b: (theta[b], b))
        ratios = w[k] / w[B] if B else np.empty(0)
        for q in range(len(B) + 1):
            if normalization == "inclusive":
                pk = (1 - (n_a + len(B) - q) * alpha) / (1 + ratios[:q].sum())
            else:
                if q == 0:
                    continue
                pk = (1 - n_a * alpha - (len(B) - q + 1) * alpha) / (1 + ratios[: q - 1].sum())
            p = np.full(n, alpha)
            p[k] = pk
            p[B[:q]] = ratios[:q] * pk
            if not _feasible(p, k, w, alpha):
                continue
            u = inner_objective(p, w, theta)
            if best is None:
                best = InnerSolution(p, u, k, q)
                continue
            tol = 1e-12 * max(1.0, abs(best.u))
            if u < best.u - tol or (abs(u - best.u) <= tol and _lex_less(p, best.p)):
                best = InnerSolution(p, u, k, q)
    if best is None:
        raise PreconditionError(
            f"no feasible structured candidate (rho={problem.rho:.6g}, alpha={alpha}, n={n})"
        )
    return best


def solve_inner_batch(w, theta, alpha: float, strict: bool = True):
    """Vectorized `solve_inner` over leading batch axes.

    `w` and `theta` broadcast to ``(..., n)``.  Returns ``(p, u)`` with
    shapes ``(..., n)`` and ``(...)``.  Entries without any feasible
    structured candidate (possible only when rho is too large, i.e. with
    ``strict=False``) get ``u = inf`` and ``p = nan``.
    """
    w, theta = np.broadcast_arrays(np.asarray(w, dtype=float), np.asarray(theta, dtype=float))
    batch_shape, n = w.shape[:-1], w.shape[-1]
    w = w.reshape(-1, n)
    theta = theta.reshape(-1, n)
    nb = w.shape[0]
    if np.any(w <= 0):
        raise DomainError("all overlaps w_j must be positive; clamp zeros before solving")
    if strict:
        check_alpha(w, alpha)

    order = np.argsort(theta, axis=1, kind="stable")
    rank = np.argsort(order, axis=1)  # position of each config in the sorted order
    ws = np.take_along_axis(w, order, axis=1)
    ts = np.take_along_axis(theta, order, axis=1)

    def prefix(x):
        return np.concatenate([np.zeros((nb, 1)), np.cumsum(x, axis=1)], axis=1)

    c_inv, c_tw, c_t = prefix(1.0 / ws), prefix(ts / ws), prefix(ts)

    q = np.arange(n)
    rk = rank[:, :, None]  # (nb, k, 1)
    shifted = q[None, None, :] >= rk
    # first q entries of the sorted order with k removed
    idx = np.where(shifted, q + 1, q)  # (nb, k, q)
    wk = w[:, :, None]
    tk = theta[:, :, None]

    def excl(c, xk):
        g = np.take_along_axis(c, idx.reshape(nb, -1), axis=1).reshape(idx.shape)
        return np.where(shifted, g - xk, g)

    s_inv = excl(c_inv, 1.0 / wk)
    s_tw = excl(c_tw, tk / wk)
    s_t = excl(c_t, tk)

    pk = (1 - (n - 1 - q) * alpha) / (1 + wk * s_inv)
    u = pk * (wk + tk + wk * s_tw) + alpha * (theta.sum(axis=1)[:, None, None] - tk - s_t)

    threshold = wk + tk
    size_b = (theta[:, None, :] <= threshold).sum(axis=2, keepdims=True) - 1  # k itself counts
    wmax = w.max(axis=1)[:, None, None]
    feasible = (q <= size_b) & (pk >= alpha - FEAS_TOL) & (wk * pk >= alpha * wmax * (1 - FEAS_TOL))
    u = np.where(feasible, u, np.inf).reshape(nb, -1)

    u_min = u.min(axis=1)
    tol = 1e-12 * np.maximum(1.0, np.abs(u_min))
    ties = u <= (u_min + tol)[:, None]
    # Tied candidates (anchor k equalizing b duplicates anchor b equalizing k)
    # are resolved toward the lexicographically smallest p.
    rows, cand = np.nonzero(ties)
    ks, qs = np.divmod(cand, n)
    pk_sel = pk[rows, ks, qs]
    rank_k = rank[rows, ks][:, None]
    r_excl = np.where(rank[rows] > rank_k, rank[rows] - 1, rank[rows])
    eq = (r_excl < qs[:, None]) & (np.arange(n)[None, :] != ks[:, None])
    lvl = (w[rows, ks] * pk_sel)[:, None]
    p_all = np.where(eq, lvl / w[rows], alpha)
    p_all[np.arange(rows.size), ks] = pk_sel
    keys = tuple(p_all[:, j] for j in reversed(range(n))) + (rows,)
    srt = np.lexsort(keys)
    _, first = np.unique(rows[srt], return_index=True)
    p = p_all[srt[first]]

    bad = ~np.isfinite(u_min)
    p[bad] = np.nan
    u_out = np.max(w * p, axis=1) + np.sum(theta * p, axis=1)
    u_out[bad] = np.inf
    return p.reshape(*batch_shape, n), u_out.reshape(batch_shape)


# --------------------------------------------------------------------------
# oracles


def _grid_points(n: int, alpha: float, resolution: float):
    free = 1 - n * alpha
    steps = max(1, math.ceil(free / resolution - 1e-9))
    h = free / steps
    if n == 1:
        yield np.ones((1, 1))
        return
    for lead in itertools.product(range(steps + 1), repeat=n - 2):
        rest = steps - sum(lead)
        if rest < 0:
            continue
        a = np.arange(rest + 1)
        pts = np.empty((a.size, n))
        pts[:, : n - 2] = lead
        pts[:, n - 2] = a
        pts[:, n - 1] = rest - a
        yield alpha + h * pts


def _oracle_grid(problem: InnerProblem, resolution: float) -> InnerSolution:
    if problem.n > 4:
        raise ValidationError("grid oracle supports n <= 4", "n")
    w, theta = problem.w, problem.theta
    best_u, best_p = np.inf, None
    for pts in _grid_points(problem.n, problem.alpha, resolution):
        u = np.max(pts * w, axis=1) + pts @ theta
        i = int(np.argmin(u))
        if u[i] < best_u:
            best_u, best_p = float(u[i]), pts[i].copy()
    return InnerSolution(best_p, best_u)


def _line_search(p, a, b, w, theta, alpha):
    """Best transfer of mass t in [0, p_a - alpha] from coordinate a to b.

    U is piecewise linear along the line, so it suffices to evaluate the
    endpoints and every point where two of the products w_j p_j cross.
    """
    t_max = p[a] - alpha
    if t_max <= 0:
        return 0.0
    levels = w * p
    ts = [0.0, t_max]
    others = [j for j in range(len(p)) if j != a and j != b]
    for j in others:
        ts.append((levels[j] - levels[b]) / w[b])
        ts.append((levels[a] - levels[j]) / w[a])
    ts.append((levels[a] - levels[b]) / (w[a] + w[b]))
    ts = np.clip(np.array(ts), 0.0, t_max)
    best_t, best_u = 0.0, inner_objective(p, w, theta)
    for t in ts:
        cand = p.copy()
        cand[a] -= t
        cand[b] += t
        u = inner_objective(cand, w, theta)
        if u < best_u - 1e-15:
            best_t, best_u = float(t), u
    return best_t


def _oracle_structured(problem: InnerProblem, sweeps: int = 50) -> InnerSolution:
    w, theta, alpha, n = problem.w, problem.theta, problem.alpha, problem.n
    best_u, best_p = np.inf, None
    for k in range(n):
        others = [j for j in range(n) if j != k]
        for r in range(n):
            for eq in itertools.combinations(others, r):
                eq = list(eq)
                pk = (1 - (n - 1 - r) * alpha) / (1 + w[k] * np.sum(1.0 / w[eq]))
                p = np.full(n, alpha)
                p[k] = pk
                p[eq] = w[k] * pk / w[eq]
                if np.min(p) < alpha - 1e-12:
                    continue
                u = inner_objective(p, w, theta)
                if u < best_u:
                    best_u, best_p = u, p
    if best_p is None:
        best_p = np.full(n, alpha)
        best_p[int(np.argmin(theta))] += 1 - n * alpha
        best_u = inner_objective(best_p, w, theta)
    p = best_p.copy()
    for _ in range(sweeps):
        improved = False
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                t = _line_search(p, a, b, w, theta, alpha)
                if t > 0:
                    p[a] -= t
                    p[b] += t
                    improved = True
        if not improved:
            break
    return InnerSolution(p, inner_objective(p, w, theta))


def oracle_solve_inner(problem: InnerProblem, resolution: float = 1e-3, mode: str = "auto") -> InnerSolution:
    """Independent check of `solve_inner`.

    ``mode="grid"`` searches a lattice on the alpha-truncated simplex (n <= 4);
    ``mode="structured"`` enumerates anchor/equalized-subset candidates
    without any sorting argument and refines the best one by exact pairwise
    line searches.  ``"auto"`` picks grid for n <= 3.
    """
    if not resolution > 0:
        raise ValidationError(f"resolution must be positive, got {resolution}", "resolution")
    if mode == "auto":
        mode = "grid" if problem.n <= 3 else "structured"
    if mode == "grid":
        return _oracle_grid(problem, resolution)
    if mode == "structured":
        return _oracle_structured(problem)
    raise ValueError(f"unknown oracle mode {mode!r}")


def grid_bound(problem: InnerProblem, resolution: float) -> float:
    """Worst-case excess of the best grid point over the true optimum."""
    return resolution * (float(np.max(problem.w)) + float(np.max(np.abs(problem.theta)))) * problem.n


# --------------------------------------------------------------------------


def solve_bellman_update(i, tau, V, M, overlaps: OverlapTable, gamma, alpha, strict: bool = True):
    """Best row ``p`` for state `i` at period `tau` and its Bellman value.

    value = u / tau + (1 - gamma / tau) * V[i]
    """
    if gamma > tau + 1e-12:
        raise ValidationError(f"gamma={gamma} exceeds tau={tau}", "gamma")
    M = np.asarray(M, dtype=float)
    V = np.asarray(V, dtype=float)
    w = clamp_overlaps(overlaps.lookup(tau))
    theta = theta_coefficients(M[i], gamma, V)
    sol = solve_inner(InnerProblem(w, theta, alpha, strict=strict))
    return sol.p, sol.u / tau + (1 - gamma / tau) * V[i]


def check_structure(problem: InnerProblem, p, tol: float = 1e-9):
    """Return ``(prop1_ok, prop2_ok)`` for a candidate solution `p`.

    Some configuration ``k`` attaining the max term must satisfy both:
    every ``a`` with ``theta_a > w_k + theta_k`` sits at alpha, and the
    remaining ones, sorted by theta, are an equalized prefix followed by
    floored entries.
    """
    w, theta, alpha = problem.w, problem.theta, problem.alpha
    p = np.asarray(p, dtype=float)
    levels = w * p
    top = np.max(levels)
    prop1_any = prop2_any = False
    for k in np.flatnonzero(levels >= top * (1 - tol) - tol):
        threshold = w[k] + theta[k]
        others = [j for j in range(problem.n) if j != k]
        A = [a for a in others if theta[a] > threshold]
        prop1 = all(abs(p[a] - alpha) <= tol for a in A)
        B = sorted((b for b in others if theta[b] <= threshold), key=lambda b: (theta[b], b))
        q = 0
        while q < len(B) and abs(levels[B[q]] - levels[k]) <= tol * max(1.0, levels[k]):
            q += 1
        prop2 = all(abs(p[b] - alpha) <= tol for b in B[q:])
        prop1_any |= prop1
        prop2_any |= prop1 and prop2
        if prop1 and prop2:
            break
    return prop1_any, prop2_any
