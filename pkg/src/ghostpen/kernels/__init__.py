"""Dense convex kernels: box-bounded LP, strongly convex QP, subgradient fallback."""

from .base import (
    INFEASIBLE,
    KERNEL_TOL,
    MAX_ITER,
    OPTIMAL,
    KernelError,
    KernelSolution,
    LpProblem,
    QpProblem,
)
from .fallback import solve_convex_fallback
from .lp import lp_dual_objective, solve_lp
from .qp import find_feasible_point, qp_residuals, solve_qp

__all__ = [
    "INFEASIBLE",
    "KERNEL_TOL",
    "MAX_ITER",
    "OPTIMAL",
    "KernelError",
    "KernelSolution",
    "LpProblem",
    "QpProblem",
    "find_feasible_point",
    "lp_dual_objective",
    "qp_residuals",
    "solve_convex_fallback",
    "solve_lp",
    "solve_qp",
]
