"""Problem instances: JSON I/O and random generation."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .attack_models import (
    AttackTimeModel,
    ExponentialAttack,
    OverlapTable,
    attack_model_from_dict,
    build_overlap_table,
    estimate_overlap_table,
    make_tau_grid,
)
from .exceptions import ValidationError
from .game_core import as_migration_matrix

logger = logging.getLogger(__name__)

DEFAULTS = dict(alpha=0.01, omega=0.01, tau_min=0.1, tau_max=5.0, delta=0.1)
MEAN_ATTACK_FLOOR = 0.05

__all__ = [
    "Scenario",
    "DEFAULTS",
    "generate_scenario",
    "sample_cost_matrix",
    "sample_attack_models",
    "load_scenario",
    "save_scenario",
]


@dataclass
class Scenario:
    M: np.ndarray
    attack_models: list
    alpha: float = DEFAULTS["alpha"]
    tau_min: float = DEFAULTS["tau_min"]
    tau_max: float = DEFAULTS["tau_max"]
    delta: float = DEFAULTS["delta"]
    omega: float = DEFAULTS["omega"]
    gamma: float | None = None
    seed: int = 0
    # None: closed-form overlaps; otherwise Monte Carlo with that many samples
    overlap_samples: int | None = None
    _overlaps: OverlapTable | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.M = as_migration_matrix(self.M)
        self.attack_models = list(self.attack_models)
        n = self.M.shape[0]
        if len(self.attack_models) != n:
            raise ValidationError(f"expected {n} attack models, got {len(self.attack_models)}", "attack_models")
        for name in ("alpha", "tau_min", "tau_max", "delta", "omega"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValidationError(f"must be a finite number, got {v!r}", name)
        if not (0 < self.alpha <= 1.0 / n + 1e-12):
            raise ValidationError(f"need 0 < alpha <= 1/n = {1 / n:.6g}, got {self.alpha}", "alpha")
        if not self.tau_min > 0:
            raise ValidationError(f"must be positive, got {self.tau_min}", "tau_min")
        if self.tau_max < self.tau_min:
            raise ValidationError(f"must be >= tau_min, got {self.tau_max}", "tau_max")
        if not self.delta > 0:
            raise ValidationError(f"must be positive, got {self.delta}", "delta")
        if not self.omega > 0:
            raise ValidationError(f"must be positive, got {self.omega}", "omega")
        if self.gamma is None:
            self.gamma = float(self.tau_min)
        if not (0 < self.gamma <= self.tau_min + 1e-12):
            raise ValidationError(f"need 0 < gamma <= tau_min, got {self.gamma}", "gamma")
        if self.overlap_samples is not None and self.overlap_samples < 1:
            raise ValidationError("must be a positive integer", "overlap_samples")

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def tau_grid(self) -> np.ndarray:
        return make_tau_grid(self.tau_min, self.tau_max, self.delta)

    @property
    def overlaps(self) -> OverlapTable:
        if self._overlaps is None:
            if self.overlap_samples is None:
                self._overlaps = build_overlap_table(self.attack_models, self.tau_grid)
            else:
                rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(7,)))
                self._overlaps = estimate_overlap_table(
                    self.attack_models, self.tau_grid, self.overlap_samples, rng
                )
        return self._overlaps

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "M": self.M.tolist(),
            "attack_models": [m.to_dict() for m in self.attack_models],
            "alpha": self.alpha,
            "tau_min": self.tau_min,
            "tau_max": self.tau_max,
            "delta": self.delta,
            "omega": self.omega,
            "gamma": self.gamma,
            "seed": self.seed,
            "overlap_samples": self.overlap_samples,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise ValidationError("scenario must be a JSON object", "scenario")
        for key in ("M", "attack_models"):
            if key not in d:
                raise ValidationError("missing required field", key)
        try:
            M = np.array(d["M"], dtype=float)
        except (TypeError, ValueError):
            raise ValidationError("must be a numeric square matrix", "M") from None
        if not isinstance(d["attack_models"], list):
            raise ValidationError("must be a list", "attack_models")
        models = [attack_model_from_dict(m) for m in d["attack_models"]]
        if "n" in d and d["n"] != M.shape[0]:
            raise ValidationError(f"n={d['n']} does not match M of size {M.shape[0]}", "n")
        kwargs = {}
        for key in ("alpha", "tau_min", "tau_max", "delta", "omega", "gamma"):
            if d.get(key) is not None:
                val = d[key]
                if isinstance(val, bool) or not isinstance(val, (int, float)):
                    raise ValidationError(f"must be a number, got {val!r}", key)
                kwargs[key] = float(val)
        if "seed" in d:
            if isinstance(d["seed"], bool) or not isinstance(d["seed"], int):
                raise ValidationError(f"must be an integer, got {d['seed']!r}", "seed")
            kwargs["seed"] = int(d["seed"])
        if d.get("overlap_samples") is not None:
            kwargs["overlap_samples"] = int(d["overlap_samples"])
        return cls(M, models, **kwargs)


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}", "scenario") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in {path}: {exc}", "scenario") from None
    return Scenario.from_dict(data)


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n")


def _check_range(lo, hi, name):
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ValidationError(f"invalid range ({lo}, {hi})", name)


def sample_cost_matrix(n: int, cost_range: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    lo, hi = cost_range
    _check_range(lo, hi, "cost_range")
    if lo < 0:
        raise ValidationError("migration costs must be nonnegative", "cost_range")
    return rng.uniform(lo, hi, size=(n, n))


def sample_attack_models(
    n: int, mean_range: Sequence[float], rng: np.random.Generator
) -> list[AttackTimeModel]:
    """Exponential attack times with means drawn uniformly from `mean_range`.

    Means are floored at ``MEAN_ATTACK_FLOOR`` so that a range touching zero
    still yields valid rates.
    """
    lo, hi = mean_range
    _check_range(lo, hi, "mean_attack_time_range")
    if hi <= 0:
        raise ValidationError("mean attack time range must contain positive values", "mean_attack_time_range")
    means = rng.uniform(lo, hi, size=n)
    floored = means < MEAN_ATTACK_FLOOR
    if np.any(floored):
        logger.info("flooring %d mean attack times at %g", int(floored.sum()), MEAN_ATTACK_FLOOR)
        means = np.maximum(means, MEAN_ATTACK_FLOOR)
    return [ExponentialAttack(1.0 / m) for m in means]


def generate_scenario(
    n: int,
    cost_range: Sequence[float],
    mean_attack_time_range: Sequence[float],
    rng: np.random.Generator | int | None = None,
    **defaults,
) -> Scenario:
    """Random instance: i.i.d. uniform migration costs, exponential attack times.

    `defaults` override the scenario parameters (alpha, omega, tau_min,
    tau_max, delta, gamma, seed, overlap_samples).
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValidationError(f"n must be a positive integer, got {n!r}", "n")
    if rng is None or isinstance(rng, (int, np.integer)):
        seed = 0 if rng is None else int(rng)
        defaults.setdefault("seed", seed)
        rng = np.random.default_rng(seed)
    M = sample_cost_matrix(n, cost_range, rng)
    models = sample_attack_models(n, mean_attack_time_range, rng)
    params = dict(DEFAULTS)
    params.update(defaults)
    return Scenario(M, models, **params)
