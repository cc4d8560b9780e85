"""Attack-time distributions and the expected-overlap function.

For a defense period of length ``tau`` and a random attack time ``a`` the
expected compromised time is ``w(tau) = E[max(tau - a, 0)]``.  Three
families are supported: exponential, deterministic (point mass) and
empirical (a stored sample, evaluated with the plug-in estimator).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .exceptions import GridLookupError, ValidationError

__all__ = [
    "ExponentialAttack",
    "DeterministicAttack",
    "EmpiricalAttack",
    "AttackTimeModel",
    "OverlapTable",
    "expected_overlap",
    "sample_attack_time",
    "make_tau_grid",
    "build_overlap_table",
    "estimate_overlap_table",
    "attack_model_from_dict",
]

GRID_TOL = 1e-12


@dataclass(frozen=True)
class ExponentialAttack:
    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValidationError(f"exponential rate must be positive, got {self.rate!r}", "rate")

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def expected_overlap(self, tau: float) -> float:
        if tau <= 0:
            return 0.0
        # tau - (1 - exp(-rate*tau)) / rate
        w = tau + math.expm1(-self.rate * tau) / self.rate
        return min(max(w, 0.0), tau)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def to_dict(self) -> dict:
        return {"type": "exponential", "rate": float(self.rate)}


@dataclass(frozen=True)
class DeterministicAttack:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValidationError(f"deterministic value must be >= 0, got {self.value!r}", "value")

    @property
    def mean(self) -> float:
        return float(self.value)

    def expected_overlap(self, tau: float) -> float:
        return max(tau - self.value, 0.0)

    def sample(self, rng: np.random.Generator, size=None):
        if size is None:
            return float(self.value)
        return np.full(size, float(self.value))

    def to_dict(self) -> dict:
        return {"type": "deterministic", "value": float(self.value)}


@dataclass(frozen=True)
class EmpiricalAttack:
    samples: tuple = field()

    def __post_init__(self):
        samples = tuple(float(s) for s in self.samples)
        if not samples:
            raise ValidationError("empirical samples must be nonempty", "samples")
        if any(not math.isfinite(s) or s < 0 for s in samples):
            raise ValidationError("empirical samples must be finite and >= 0", "samples")
        object.__setattr__(self, "samples", samples)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    def expected_overlap(self, tau: float) -> float:
        if tau <= 0:
            return 0.0
        s = np.asarray(self.samples)
        return float(np.mean(np.maximum(tau - s, 0.0)))

    def sample(self, rng: np.random.Generator, size=None):
        s = np.asarray(self.samples)
        idx = rng.integers(len(s), size=size)
        return float(s[idx]) if size is None else s[idx]

    def to_dict(self) -> dict:
        return {"type": "empirical", "samples": [float(s) for s in self.samples]}


AttackTimeModel = Union[ExponentialAttack, DeterministicAttack, EmpiricalAttack]


def expected_overlap(model: AttackTimeModel, tau: float) -> float:
    """Return ``E[max(tau - a, 0)]`` for ``a`` distributed by `model`."""
    if tau < 0:
        raise ValidationError(f"tau must be >= 0, got {tau!r}", "tau")
    return model.expected_overlap(float(tau))


def sample_attack_time(model: AttackTimeModel, rng: np.random.Generator) -> float:
    return float(model.sample(rng))


def attack_model_from_dict(d: dict) -> AttackTimeModel:
    """Parse the JSON form ``{"type": ..., <param>: ...}`` of an attack model."""
    if not isinstance(d, dict) or "type" not in d:
        raise ValidationError("attack model must be an object with a 'type' key", "attack_models")
    kind = d["type"]
    try:
        if kind == "exponential":
            return ExponentialAttack(float(d["rate"]))
        if kind == "deterministic":
            return DeterministicAttack(float(d["value"]))
        if kind == "empirical":
            return EmpiricalAttack(tuple(d["samples"]))
    except KeyError as exc:
        raise ValidationError(f"missing key {exc.args[0]!r} for {kind} model", "attack_models") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise ValidationError(str(exc), "attack_models") from None
        raise ValidationError(f"bad parameter for {kind} model: {exc}", "attack_models") from None
    raise ValidationError(f"unknown attack model type {kind!r}", "attack_models")


def make_tau_grid(tau_min: float, tau_max: float, step: float) -> np.ndarray:
    """Inclusive grid ``tau_min, tau_min + step, ..., tau_max``.

    Points are rounded to 12 decimals so that values such as ``0.3`` are
    reachable by exact lookup; ``tau_max`` is appended when the range is not
    a whole number of steps.
    """
    if not (tau_min > 0 and tau_max >= tau_min):
        raise ValidationError(f"need 0 < tau_min <= tau_max, got ({tau_min}, {tau_max})", "tau_min")
    if tau_max == tau_min:
        return np.array([float(tau_min)])
    if not step > 0:
        raise ValidationError(f"grid step must be positive, got {step}", "delta")
    count = int(math.floor((tau_max - tau_min) / step + 1e-9))
    grid = np.round(tau_min + step * np.arange(count + 1), 12)
    if tau_max - grid[-1] > 1e-9:
        grid = np.append(grid, float(tau_max))
    return grid


@dataclass
class OverlapTable:
    """Expected overlaps ``entries[t, j] = w_j(grid[t])``."""

    grid: np.ndarray
    entries: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.entries = np.asarray(self.entries, dtype=float)
        if self.entries.shape[0] != self.grid.size:
            raise ValidationError("entries must have one row per grid point", "entries")

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def index(self, tau: float) -> int:
        t = int(np.searchsorted(self.grid, tau - GRID_TOL))
        if t < self.grid.size and abs(self.grid[t] - tau) <= GRID_TOL:
            return t
        raise GridLookupError(f"tau={tau!r} is not on the overlap grid")

    def lookup(self, tau: float) -> np.ndarray:
        """Row of overlaps ``w_j(tau)`` for every configuration j."""
        return self.entries[self.index(tau)]


def _check_grid(tau_grid) -> np.ndarray:
    grid = np.asarray(tau_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("tau grid must be a nonempty 1-D sequence", "tau_grid")
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValidationError("tau grid must be nonnegative and strictly increasing", "tau_grid")
    return grid


def build_overlap_table(models: Sequence[AttackTimeModel], tau_grid) -> OverlapTable:
    grid = _check_grid(tau_grid)
    entries = np.array([[m.expected_overlap(float(t)) for m in models] for t in grid]).reshape(
        grid.size, len(models)
    )
    return OverlapTable(grid, entries)


def estimate_overlap_table(
    models: Sequence[AttackTimeModel],
    tau_grid,
    sample_count: int = 500,
    rng: np.random.Generator | None = None,
) -> OverlapTable:
    """Monte Carlo overlap table.

    One batch of `sample_count` attack times is drawn per configuration and
    reused for every grid point, so each column is a monotone function of tau.
    """
    if sample_count < 1:
        raise ValidationError("sample_count must be >= 1", "sample_count")
    grid = _check_grid(tau_grid)
    rng = np.random.default_rng() if rng is None else rng
    entries = np.empty((grid.size, len(models)))
    for j, m in enumerate(models):
        a = np.asarray(m.sample(rng, sample_count), dtype=float)
        entries[:, j] = np.maximum(grid[:, None] - a[None, :], 0.0).mean(axis=1)
    return OverlapTable(grid, entries)
