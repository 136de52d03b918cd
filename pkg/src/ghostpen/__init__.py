"""Ghost-penalty successive convex approximation for nonconvex constrained problems.

Typical use::

    from ghostpen import get_problem, SolverConfig, run_algorithm3, direction_at, classify_point

    p = get_problem("prob_A")
    cfg = SolverConfig(delta=1e-3)
    run = run_algorithm3(p, cfg)
    report = classify_point(p, run.x, run.final, cfg)
"""

from .audit import AuditResult, audit_state, audit_trace
from .bounds import theorem_bounds
from .constants import estimate_constants
from .core import (
    DirectionResult,
    StationarityReport,
    classify_point,
    compute_kappa,
    direction_at,
    ghost_penalty,
    lemma5_bounds,
    solve_direction,
)
from .drivers import (
    DriverState,
    HalvingCapError,
    IterationRecord,
    run_algorithm1,
    run_algorithm2,
    run_algorithm3,
)
from .loader import load_problem, parse_problem
from .problem import ConfigError, OracleError, ProblemConstants, ProblemInstance, SolverConfig
from .registry import UnknownProblemError, get_problem, names
from .surrogates import SurrogateModelAt, check_assumption_A, make_quadlin_surrogate

__version__ = "0.1.0"

__all__ = [
    "AuditResult",
    "ConfigError",
    "DirectionResult",
    "DriverState",
    "HalvingCapError",
    "IterationRecord",
    "OracleError",
    "ProblemConstants",
    "ProblemInstance",
    "SolverConfig",
    "StationarityReport",
    "SurrogateModelAt",
    "UnknownProblemError",
    "audit_state",
    "audit_trace",
    "check_assumption_A",
    "classify_point",
    "compute_kappa",
    "direction_at",
    "estimate_constants",
    "get_problem",
    "ghost_penalty",
    "lemma5_bounds",
    "load_problem",
    "make_quadlin_surrogate",
    "names",
    "parse_problem",
    "run_algorithm1",
    "run_algorithm2",
    "run_algorithm3",
    "solve_direction",
    "theorem_bounds",
]
