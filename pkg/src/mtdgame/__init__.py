"""Moving-target defense against a myopic attacker.

Joint optimization of configuration transition probabilities and
per-configuration defense periods, with fixed-period baselines, exact
policy evaluation and a Monte Carlo game simulator.
"""

from .attack_models import (
    DeterministicAttack,
    EmpiricalAttack,
    ExponentialAttack,
    OverlapTable,
    build_overlap_table,
    expected_overlap,
)
from .baselines import BaselineResult, solve_ps, solve_rs
from .exceptions import (
    DomainError,
    GridLookupError,
    MTDError,
    NonConvergence,
    PreconditionError,
    ValidationError,
)
from .game_core import DefenseStrategy, PolicyCost, evaluate_policy, stationary_distribution
from .minmax import InnerProblem, InnerSolution, oracle_solve_inner, solve_inner
from .scenario import Scenario, generate_scenario, load_scenario, save_scenario
from .simulator import SimResult, replicate, simulate
from .value_iteration import SolveReport, value_iteration

__version__ = "0.1.0"
