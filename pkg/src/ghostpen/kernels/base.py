from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"

# default primal/dual tolerance shared by the kernels
KERNEL_TOL = 1e-8


class KernelError(RuntimeError):
    """Raised on invalid kernel input or when a solve does not reach optimality."""


@dataclass(frozen=True)
class LpProblem:
    """min cost @ x  s.t.  A_ub @ x <= b_ub,  lb <= x <= ub (all bounds finite)."""

    cost: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=float).ravel()
        A = np.atleast_2d(np.asarray(self.A_ub, dtype=float))
        b = np.asarray(self.b_ub, dtype=float).ravel()
        lb = np.asarray(self.lb, dtype=float).ravel()
        ub = np.asarray(self.ub, dtype=float).ravel()
        n = cost.size
        if A.shape != (b.size, n) or lb.size != n or ub.size != n:
            raise KernelError(f"inconsistent LP dimensions: A{A.shape}, b{b.shape}, n={n}")
        if not (np.all(np.isfinite(lb)) and np.all(np.isfinite(ub))):
            raise KernelError("LP variables must have finite bounds")
        if np.any(lb > ub):
            raise KernelError("LP lower bound exceeds upper bound")
        for name, val in (("cost", cost), ("A_ub", A), ("b_ub", b), ("lb", lb), ("ub", ub)):
            object.__setattr__(self, name, np.ascontiguousarray(val))


@dataclass(frozen=True)
class QpProblem:
    """min 0.5 d'Hd + q'd  s.t.  G @ d <= h,  ||d||_inf <= beta.

    ``G`` holds one row per linearized constraint, i.e. the transpose of the
    n-by-m matrix whose columns are constraint gradients.
    """

    H: np.ndarray
    q: np.ndarray
    G: np.ndarray
    h: np.ndarray
    beta: float

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        q = np.asarray(self.q, dtype=float).ravel()
        n = q.size
        G = np.asarray(self.G, dtype=float).reshape(-1, n)
        h = np.asarray(self.h, dtype=float).ravel()
        if H.shape != (n, n) or G.shape[0] != h.size:
            raise KernelError(f"inconsistent QP dimensions: H{H.shape}, G{G.shape}, h{h.shape}")
        if not np.allclose(H, H.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(H).max())):
            raise KernelError("QP quadratic term is not symmetric")
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise KernelError("QP box radius must be positive and finite")
        for name, val in (("H", H), ("q", q), ("G", G), ("h", h)):
            object.__setattr__(self, name, np.ascontiguousarray(val))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def n(self) -> int:
        return self.q.size

    def objective(self, d) -> float:
        d = np.asarray(d, dtype=float)
        return float(0.5 * d @ self.H @ d + self.q @ d)


@dataclass
class KernelSolution:
    x: np.ndarray
    multipliers: np.ndarray
    objective: float
    status: str
    iterations: int
    # multipliers of the box rows (QP only); internal, kept for residual checks
    box_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL
