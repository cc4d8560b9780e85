"""Parameter sweeps, results CSV and the Min-Max oracle check."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import solve_ps, solve_rs
from .exceptions import MTDError, ValidationError
from .game_core import evaluate_policy
from .minmax import InnerProblem, grid_bound, oracle_solve_inner, solve_inner
from .scenario import DEFAULTS, Scenario, sample_attack_models, sample_cost_matrix
from .simulator import simulate
from .value_iteration import value_iteration

logger = logging.getLogger(__name__)

WORKERS_ENV = "MTDGAME_WORKERS"

CSV_COLUMNS = [
    "scenario_id",
    "axis_value",
    "trial",
    "policy",
    "g_est",
    "g_lo",
    "g_hi",
    "cost_evaluated",
    "cost_simulated",
    "iterations",
    "wall_time_ms",
    "note",
]
_FLOAT_COLUMNS = {"axis_value", "g_est", "g_lo", "g_hi", "cost_evaluated", "cost_simulated", "wall_time_ms"}
_INT_COLUMNS = {"trial", "iterations"}

KINDS = ("configuration-count", "mean-attack-time", "cost-variance")
POLICIES = ("vi", "rs", "ps")

_DESK_AXES = {
    "configuration-count": [5, 10, 15],
    "mean-attack-time": [0.5, 1.5, 2.5],
    "cost-variance": [0.25, 0.5, 0.75, 1.0, 1.25],
}
_FULL_AXES = {
    "configuration-count": [5, 10, 15, 20, 25, 30],
    "mean-attack-time": [0.5, 1.0, 1.5, 2.0, 2.5],
    "cost-variance": [0.25, 0.5, 0.75, 1.0, 1.25],
}


@dataclass
class SweepSpec:
    """One of the three sweep protocols.

    configuration-count varies n with costs ``cost_range`` and mean attack
    times ``mean_range``; mean-attack-time varies the center of a mean range
    of half-width ``mean_half_width``; cost-variance varies the half-width of
    a cost range centered at ``cost_mean``.  Each axis point runs
    ``cost_samples * attack_samples`` trials.
    """

    kind: str
    axis: list | None = None
    cost_samples: int = 3
    attack_samples: int = 3
    seed: int = 0
    n: int = 10
    cost_range: tuple | None = None
    cost_mean: float = 1.5
    mean_range: tuple | None = None
    mean_half_width: float = 0.5
    sim_horizon: int = 0
    record_timing: bool = False
    scenario: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown sweep kind {self.kind!r}; expected one of {KINDS}", "kind")
        if self.axis is None:
            self.axis = list(_DESK_AXES[self.kind])
        self.axis = list(self.axis)
        if not self.axis:
            raise ValidationError("axis must be nonempty", "axis")
        if self.cost_samples < 1 or self.attack_samples < 1:
            raise ValidationError("trial counts must be >= 1", "cost_samples")
        if self.cost_range is None:
            self.cost_range = (0.0, 1.5) if self.kind == "configuration-count" else (0.5, 1.0)
        if self.mean_range is None:
            self.mean_range = (1.0, 2.0) if self.kind == "configuration-count" else (0.5, 1.5)
        self.cost_range = tuple(float(x) for x in self.cost_range)
        self.mean_range = tuple(float(x) for x in self.mean_range)
        unknown = set(self.scenario) - {"alpha", "omega", "tau_min", "tau_max", "delta", "gamma", "overlap_samples"}
        if unknown:
            raise ValidationError(f"unknown scenario overrides {sorted(unknown)}", "scenario")

    @classmethod
    def full_scale(cls, kind: str, **kw) -> "SweepSpec":
        kw.setdefault("axis", _FULL_AXES[kind])
        kw.setdefault("cost_samples", 10)
        kw.setdefault("attack_samples", 10)
        kw.setdefault("scenario", {"overlap_samples": 500})
        return cls(kind, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise ValidationError("sweep spec must be an object with a 'kind' field", "kind")
        d = dict(d)
        full = d.pop("full_scale", False)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown fields {sorted(unknown)}", sorted(unknown)[0])
        kind = d.pop("kind")
        return cls.full_scale(kind, **d) if full else cls(kind, **d)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def trials(self) -> int:
        return self.cost_samples * self.attack_samples

    def point_ranges(self, value):
        """``(n, cost_range, mean_range)`` at one axis value."""
        if self.kind == "configuration-count":
            return int(value), self.cost_range, self.mean_range
        if self.kind == "mean-attack-time":
            h = self.mean_half_width
            return self.n, self.cost_range, (value - h, value + h)
        lo = self.cost_mean - value
        if lo < 0:
            raise ValidationError(f"half-width {value} makes costs negative", "axis")
        return self.n, (lo, self.cost_mean + value), self.mean_range


def _seq(seed, *key):
    return np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))


def trial_scenario(spec: SweepSpec, point: int, trial: int) -> Scenario:
    """Scenario for one (axis point, trial).

    Cost matrices come from stream ``(0, c)`` and attack models from
    ``(1, a)`` with ``trial = c * attack_samples + a``; streams do not depend
    on the axis point, so neighbouring points share random numbers.
    """
    c, a = divmod(trial, spec.attack_samples)
    n, cost_range, mean_range = spec.point_ranges(spec.axis[point])
    M = sample_cost_matrix(n, cost_range, np.random.default_rng(_seq(spec.seed, 0, c)))
    models = sample_attack_models(n, mean_range, np.random.default_rng(_seq(spec.seed, 1, a)))
    params = dict(DEFAULTS)
    params.update(spec.scenario)
    params["seed"] = int(_seq(spec.seed, 2, point, trial).generate_state(1)[0])
    return Scenario(M, models, **params)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _run_point_trial(args):
    spec, point, trial = args
    sid = f"{spec.kind}-p{point}-t{trial}"
    axis_value = float(spec.axis[point])
    rows = []
    try:
        sc = trial_scenario(spec, point, trial)
    except MTDError as exc:
        return [
            dict(scenario_id=sid, axis_value=axis_value, trial=trial, policy=pol, note=f"error: {exc}")
            for pol in POLICIES
        ]
    for k, policy in enumerate(POLICIES):
        row = dict(scenario_id=sid, axis_value=axis_value, trial=trial, policy=policy)
        notes = []
        t0 = time.perf_counter()
        try:
            if policy == "vi":
                res = value_iteration(sc, strict=False)
                if not res.rho_ok:
                    notes.append("rho_relaxed")
                row.update(g_est=res.g_est, g_lo=res.g_lo, g_hi=res.g_hi, iterations=res.iterations)
            else:
                res = solve_rs(sc) if policy == "rs" else solve_ps(sc)
                if res.below_alpha < sc.alpha - 1e-12:
                    notes.append("below_alpha")
                row.update(g_est=res.objective, g_lo=res.objective, g_hi=res.objective, iterations=1)
            elapsed = (time.perf_counter() - t0) * 1e3
            row["cost_evaluated"] = evaluate_policy(res.strategy, sc.M, sc.overlaps).g
            if spec.sim_horizon > 0:
                rng = np.random.default_rng(_seq(spec.seed, 3, point, trial, k))
                row["cost_simulated"] = simulate(res.strategy, sc, spec.sim_horizon, rng).empirical_cost
            if spec.record_timing:
                row["wall_time_ms"] = elapsed
        except MTDError as exc:
            notes.append(f"error: {type(exc).__name__}: {exc}")
        # keep each row on one CSV line
        row["note"] = " ".join(";".join(notes).split())
        rows.append(row)
    return rows


def _workers(workers):
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_sweep(spec: SweepSpec, out_path=None, workers: int | None = None) -> list[dict]:
    """Run every (axis point, trial) and return rows in (point, trial, policy) order.

    Rows are also written to `out_path` as CSV when given.  Solver failures
    are recorded in the row's ``note`` column and do not stop the sweep.
    """
    jobs = [(spec, p, t) for p in range(len(spec.axis)) for t in range(spec.trials)]
    nw = _workers(workers)
    if nw == 1:
        chunks = [_run_point_trial(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            chunks = list(pool.map(_run_point_trial, jobs))
    rows = [r for chunk in chunks for r in chunk]
    if out_path is not None:
        write_results(rows, out_path)
    return rows


def format_results(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_results(rows, path) -> None:
    Path(path).write_text(format_results(rows))


def parse_results(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != CSV_COLUMNS:
        raise ValidationError(f"unexpected CSV header {reader.fieldnames}", "header")
    rows = []
    for raw in reader:
        row = {}
        for key, val in raw.items():
            if val == "":
                row[key] = None if key != "note" else ""
            elif key in _FLOAT_COLUMNS:
                row[key] = float(val)
            elif key in _INT_COLUMNS:
                row[key] = int(val)
            else:
                row[key] = val
        rows.append(row)
    return rows


def read_results(path) -> list[dict]:
    return parse_results(Path(path).read_text())


def summarize(rows, value: str = "cost_evaluated") -> dict:
    """Trial means ``{(axis_value, policy): mean}`` over rows with a value."""
    acc: dict = {}
    for r in rows:
        v = r.get(value)
        if v is None or (isinstance(v, float) and math.isnan(v)):
            continue
        acc.setdefault((r["axis_value"], r["policy"]), []).append(v)
    return {k: float(np.mean(v)) for k, v in acc.items()}


# --------------------------------------------------------------------------


def random_inner_problem(rng: np.random.Generator, n: int, alpha: float = 0.01,
                         w_range=(0.1, 3.0), theta_range=(0.0, 5.0), max_tries: int = 10_000) -> InnerProblem:
    """Draw w and theta uniformly, redrawing until alpha <= 1/(n*rho) holds."""
    for _ in range(max_tries):
        w = rng.uniform(*w_range, size=n)
        if alpha * n * w.max() / w.min() <= 1:
            return InnerProblem(w, rng.uniform(*theta_range, size=n), alpha)
    raise ValidationError(f"could not draw a valid instance for n={n}, alpha={alpha}", "n")


@dataclass
class OracleReport:
    count: int
    max_deviation: float
    max_excess: float  # max over instances of (deviation - allowed tolerance)
    failures: int

    @property
    def ok(self) -> bool:
        return self.failures == 0


def oracle_check(count: int, n: int | None, seed: int, resolution: float = 1e-3,
                 alpha: float = 0.01, mode: str = "auto") -> OracleReport:
    """Compare `solve_inner` with `oracle_solve_inner` on random instances.

    With ``n=None`` each instance draws n uniformly from 2..6.  Grid-mode
    comparisons allow ``1e-6 + grid_bound``; the structured oracle ``1e-6``.
    """
    rng = np.random.default_rng(seed)
    worst = excess = -np.inf
    failures = 0
    for _ in range(count):
        size = int(rng.integers(2, 7)) if n is None else n
        prob = random_inner_problem(rng, size, alpha)
        sol = solve_inner(prob)
        used = mode if mode != "auto" else ("grid" if size <= 3 else "structured")
        ref = oracle_solve_inner(prob, resolution, used)
        allowed = 1e-6 + (grid_bound(prob, resolution) if used == "grid" else 0.0)
        dev = abs(sol.u - ref.u)
        worst = max(worst, dev)
        excess = max(excess, dev - allowed)
        # the oracle only visits feasible points, so beating the solver is a failure
        failures += dev > allowed or ref.u < sol.u - 1e-9
    return OracleReport(count, float(worst), float(excess), int(failures))
