"""Core quantities at a point: kappa, the direction d(x), theta, the ghost
penalty W and the stationarity classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kernels import (
    OPTIMAL,
    KernelError,
    LpProblem,
    QpProblem,
    solve_convex_fallback,
    solve_lp,
    solve_qp,
)
from .problem import ProblemConstants, ProblemInstance, SolverConfig
from .surrogates import QUADRATIC_LINEAR, SurrogateModelAt, make_quadlin_surrogate

SurrogateFactory = Callable[[ProblemInstance, np.ndarray, float], SurrogateModelAt]


@dataclass
class DirectionResult:
    kappa: float
    phi: float
    d: np.ndarray
    xi: np.ndarray
    theta: float
    d_norm: float
    active_rows: np.ndarray
    violation: float
    lp_iterations: int = 0
    qp_iterations: int = 0
    # quantities at the base point, kept so audits need no extra oracle calls
    base_x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    grad_f: np.ndarray = field(default_factory=lambda: np.zeros(0))
    g: np.ndarray = field(default_factory=lambda: np.zeros(0))
    jac_g: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def kernel_iterations(self) -> int:
        return self.lp_iterations + self.qp_iterations

    @property
    def xi_inf(self) -> float:
        return float(np.max(np.abs(self.xi), initial=0.0))


# --- kappa -----------------------------------------------------------------


def kappa_lp(s: SurrogateModelAt, rho: float) -> LpProblem:
    """Epigraph LP for min_{|d|_inf <= rho} max_i g~_i(d)_+ in variables (d, t)."""
    if s.linear_data is None:
        raise ValueError("kappa_lp needs a quadratic/linear surrogate")
    _, gv, J = s.linear_data
    n, m = J.shape
    top = float(max(np.max(gv), 0.0)) + 1.0
    return LpProblem(
        cost=np.r_[np.zeros(n), 1.0],
        A_ub=np.hstack([J.T, -np.ones((m, 1))]),
        b_ub=-gv,
        lb=np.r_[np.full(n, -rho), 0.0],
        ub=np.r_[np.full(n, rho), top],
    )


def _min_max_violation_general(s: SurrogateModelAt, rho: float):
    n = s.n

    def obj(d):
        return float(max(np.max(s.eval_g_tilde(d)), 0.0))

    def sub(d):
        gv = np.asarray(s.eval_g_tilde(d), dtype=float)
        i = int(np.argmax(gv))
        if gv[i] <= 0.0:
            return np.zeros(n)
        return np.asarray(s.grad1_g_tilde(d), dtype=float).reshape(n, -1)[:, i]

    sol = solve_convex_fallback(
        obj,
        sub,
        lambda d: np.zeros(0),
        lambda d: np.zeros((n, 0)),
        np.full(n, -rho),
        np.full(n, rho),
        tol=1e-6,
        max_iter=20_000,
    )
    # best iterate; its value upper-bounds phi, so kappa stays attainable
    return obj(sol.x), sol.x, sol.iterations


def kappa_details(s: SurrogateModelAt, cfg: SolverConfig):
    """Return (kappa, phi, d_hat, lp_iterations, violation).

    ``d_hat`` attains phi and is feasible for the direction subproblem.
    """
    gv = s.g0
    v = float(max(np.max(gv), 0.0))
    n = s.n
    if v == 0.0:
        return 0.0, 0.0, np.zeros(n), 0, 0.0
    if s.linear_data is not None:
        sol = solve_lp(kappa_lp(s, cfg.rho))
        if sol.status != OPTIMAL:
            raise KernelError(f"kappa LP ended with status {sol.status}")
        d_hat = sol.x[:n]
        phi = float(max(np.max(gv + s.linear_data[2].T @ d_hat), 0.0))
        iters = sol.iterations
    else:
        phi, d_hat, iters = _min_max_violation_general(s, cfg.rho)
    phi = min(max(phi, 0.0), v)
    kappa = min((1.0 - cfg.lam) * v + cfg.lam * phi, v)
    return kappa, phi, d_hat, iters, v


def compute_kappa(s: SurrogateModelAt, cfg: SolverConfig) -> tuple[float, float]:
    """(kappa, phi): kappa = (1 - lam) max g_+ + lam * phi."""
    kappa, phi, *_ = kappa_details(s, cfg)
    return kappa, phi


# --- direction ---------------------------------------------------------------


def solve_direction(
    s: SurrogateModelAt,
    kappa: float,
    cfg: SolverConfig,
    d_start=None,
    phi: float = float("nan"),
) -> DirectionResult:
    """Unique minimizer of f~ over {g~ <= kappa e, |d|_inf <= beta}, with multipliers."""
    n = s.n
    gv = s.g0
    v = float(max(np.max(gv), 0.0))
    if s.structure == QUADRATIC_LINEAR and s.linear_data is not None:
        gf, gv, J = s.linear_data
        qp = QpProblem(H=s.c * np.eye(n), q=gf, G=J.T, h=kappa - gv, beta=cfg.beta)
        sol = solve_qp(qp, x_start=d_start)
        if sol.status != OPTIMAL:
            raise KernelError(f"direction QP ended with status {sol.status}")
        d, xi = sol.x, sol.multipliers
    else:
        lo, hi = np.full(n, -cfg.beta), np.full(n, cfg.beta)
        sol = solve_convex_fallback(
            s.eval_f_tilde,
            s.grad1_f_tilde,
            lambda d: np.asarray(s.eval_g_tilde(d), dtype=float) - kappa,
            lambda d: np.asarray(s.grad1_g_tilde(d), dtype=float).reshape(n, -1),
            lo,
            hi,
            strong_convexity=s.c,
            x_start=d_start,
            tol=1e-8,
        )
        d, xi = sol.x, sol.multipliers
    gt = np.asarray(s.eval_g_tilde(d), dtype=float)
    active = np.flatnonzero(gt >= kappa - 1e-9 * (1.0 + abs(kappa)))
    theta = v - kappa
    base = s.linear_data
    return DirectionResult(
        kappa=kappa,
        phi=phi,
        d=d,
        xi=np.maximum(xi, 0.0) if np.all(xi >= -1e-10) else xi,
        theta=theta,
        d_norm=float(np.linalg.norm(d)),
        active_rows=active,
        violation=v,
        qp_iterations=sol.iterations,
        base_x=s.base_x,
        grad_f=base[0] if base else np.zeros(0),
        g=gv,
        jac_g=base[2] if base else np.zeros((0, 0)),
    )


def direction_at(
    p: ProblemInstance,
    x,
    cfg: SolverConfig,
    surrogate: SurrogateFactory | None = None,
) -> DirectionResult:
    """Build the surrogate at x, compute kappa and solve for d(x)."""
    x = np.asarray(x, dtype=float)
    s = (surrogate or make_quadlin_surrogate)(p, x, cfg.c)
    kappa, phi, d_hat, lp_it, _ = kappa_details(s, cfg)
    dr = solve_direction(s, kappa, cfg, d_start=d_hat, phi=phi)
    dr.lp_iterations = lp_it
    if dr.grad_f.size == 0:
        dr.grad_f = p.gradf(x)
        dr.jac_g = p.jacg(x)
    return dr


# --- ghost penalty -------------------------------------------------------------


def ghost_penalty(p: ProblemInstance, x, eps: float) -> float:
    """W(x; eps) = f(x) + max_i g_i(x)_+ / eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return p.fval(x) + p.max_violation(x) / eps


# --- residual bounds -------------------------------------------------------------


def residual_constant_b(constants: ProblemConstants, cfg: SolverConfig) -> float:
    """b = max of the three residual-bound coefficients."""
    k = constants
    lam = cfg.lam
    c1 = k.L_grad_tilde_f + (k.L_grad_tilde_g + 1.0 / cfg.beta) * k.M
    c2 = k.L_tilde_g / lam + k.a
    c3 = (k.L_tilde_g * (1.0 + 2.0 * lam) / lam + k.a) * k.M
    return float(max(c1, c2, c3))


def stationarity_residuals(p: ProblemInstance, x, xi, grad_f=None, g=None, jac_g=None):
    """(lagrangian, feasibility, complementarity) residuals of (x, xi)."""
    gf = p.gradf(x) if grad_f is None else grad_f
    gv = p.gval(x) if g is None else g
    J = p.jacg(x) if jac_g is None else jac_g
    xi = np.asarray(xi, dtype=float)
    lag = float(np.linalg.norm(gf + J @ xi))
    feas = float(max(np.max(gv), 0.0))
    comp = float(np.max(np.abs(gv * xi), initial=0.0))
    return lag, feas, comp


def lemma5_bounds(dr: DirectionResult, p: ProblemInstance, constants: ProblemConstants, cfg: SolverConfig) -> dict:
    """Residual-vs-bound pairs at the base point of ``dr``.

    Each entry maps to ``(lhs, rhs)``; ``b_dnorm`` is b*||d||.
    """
    k = constants
    for name in ("L_grad_tilde_f", "L_grad_tilde_g", "L_tilde_g", "M", "a"):
        if not np.isfinite(getattr(k, name)):
            raise ValueError(f"constant {name} is missing or infinite")
    lag, feas, comp = stationarity_residuals(p, dr.base_x, dr.xi, dr.grad_f, dr.g, dr.jac_g)
    nd = dr.d_norm
    lam = cfg.lam
    return {
        "lagrangian": (lag, (k.L_grad_tilde_f + (k.L_grad_tilde_g + 1.0 / cfg.beta) * k.M) * nd),
        "feasibility": (feas, (k.L_tilde_g / lam + k.a) * nd),
        "complementarity": (comp, (k.L_tilde_g * (1.0 + 2.0 * lam) / lam + k.a) * k.M * nd),
        "b": residual_constant_b(k, cfg),
        "b_dnorm": residual_constant_b(k, cfg) * nd,
    }


# --- classification ------------------------------------------------------------


@dataclass
class StationarityReport:
    classification: str
    lagrangian_residual: float
    feasibility_residual: float
    complementarity_residual: float
    feasibility_stationarity: float
    tolerances: dict
    objective_weight: float = 1.0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def simplex_min_norm(J: np.ndarray) -> tuple[float, np.ndarray]:
    """min ||J xi|| over the unit simplex; returns (residual, xi)."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    k = J.shape[1]
    if k == 1:
        return float(np.linalg.norm(J[:, 0])), np.ones(1)
    H = J.T @ J
    H = H + 1e-14 * max(1.0, float(np.trace(H))) * np.eye(k)
    ones = np.ones((1, k))
    G = np.vstack([-np.eye(k), ones, -ones])
    h = np.r_[np.zeros(k), 1.0, -1.0]
    sol = solve_qp(QpProblem(H=H, q=np.zeros(k), G=G, h=h, beta=1.0), x_start=np.full(k, 1.0 / k))
    xi = np.maximum(sol.x, 0.0)
    xi = xi / xi.sum()
    return float(np.linalg.norm(J @ xi)), xi


def classify_point(
    p: ProblemInstance,
    x,
    dr: DirectionResult,
    cfg: SolverConfig | None = None,
    tols: tuple | None = None,
) -> StationarityReport:
    """Label x as KKT, ES (infeasible stationary), FJ or none.

    Tolerances come from ``tols=(feas, stat, comp)`` or the config defaults.
    The multipliers are read as Fritz-John weights (1, xi) / (1 + |xi|_1);
    small residuals only count as KKT while the objective weight stays above
    the stationarity tolerance. Residuals driven down by exploding
    multipliers describe a point whose limit has no KKT multiplier at all.
    """
    cfg = cfg or SolverConfig()
    t_feas, t_stat, t_comp = tols if tols is not None else cfg.class_tols()
    x = np.asarray(x, dtype=float)
    gv = p.gval(x)
    J = p.jacg(x)
    lag, feas, comp = stationarity_residuals(p, x, dr.xi, g=gv, jac_g=J)
    vmax = float(np.max(gv))
    t_act = cfg.tol_act if cfg.tol_act is not None else 1e-6 * (1.0 + max(vmax, 0.0))
    if feas > t_feas:
        rows = np.flatnonzero(gv >= vmax - t_act)
    else:
        rows = np.flatnonzero(gv >= -t_act)
    fstat = simplex_min_norm(J[:, rows])[0] if rows.size else float("inf")

    weight = 1.0 / (1.0 + float(np.sum(np.abs(dr.xi))))
    if feas <= t_feas and lag <= t_stat and comp <= t_comp and weight > t_stat:
        label = "KKT"
    elif feas > t_feas and fstat <= t_stat:
        label = "ES"
    elif feas <= t_feas and fstat <= t_stat:
        label = "FJ"
    else:
        label = "none"
    return StationarityReport(
        classification=label,
        lagrangian_residual=lag,
        feasibility_residual=feas,
        complementarity_residual=comp,
        feasibility_stationarity=fstat,
        tolerances={"feas": t_feas, "stat": t_stat, "comp": t_comp, "act": t_act},
        objective_weight=weight,
    )
