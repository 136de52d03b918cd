"""Primal active-set solver for small dense strongly convex QPs.

The box ``||d||_inf <= beta`` is appended as 2n general rows, so the working
set logic only ever sees ``G d <= h``.
"""

from __future__ import annotations

import numpy as np

from .._jit import kernel
from .base import INFEASIBLE, KERNEL_TOL, MAX_ITER, OPTIMAL, KernelError, KernelSolution, LpProblem, QpProblem
from .lp import solve_lp


@kernel
def active_set_core(H, q, G, h, x0, max_iter, tol):
    """Returns (x, multipliers over all rows, status, iterations); status 0 ok, 1 limit."""
    n = H.shape[0]
    mr = G.shape[0]
    x = x0.copy()
    work = np.zeros(mr, np.bool_)
    lam = np.zeros(mr)
    for it in range(max_iter):
        k = 0
        for i in range(mr):
            if work[i]:
                k += 1
        idx = np.empty(k, np.int64)
        k = 0
        for i in range(mr):
            if work[i]:
                idx[k] = i
                k += 1
        K = np.zeros((n + k, n + k))
        rhs = np.zeros(n + k)
        for a in range(n):
            for b2 in range(n):
                K[a, b2] = H[a, b2]
            g = q[a]
            for b2 in range(n):
                g += H[a, b2] * x[b2]
            rhs[a] = -g
        for r in range(k):
            for a in range(n):
                K[a, n + r] = G[idx[r], a]
                K[n + r, a] = G[idx[r], a]
        sol = np.linalg.solve(K, rhs)
        p = sol[:n]
        pmax = 0.0
        xmax = 1.0
        for a in range(n):
            pmax = max(pmax, abs(p[a]))
            xmax = max(xmax, abs(x[a]))
        if pmax <= tol * xmax:
            # stationary on the working set: check multiplier signs
            worst = -1
            wval = -tol
            for r in range(k):
                if sol[n + r] < wval:
                    wval = sol[n + r]
                    worst = r
            if worst < 0:
                for r in range(k):
                    lam[idx[r]] = max(sol[n + r], 0.0)
                return x, lam, 0, it + 1
            work[idx[worst]] = False
            continue
        step = 1.0
        block = -1
        for i in range(mr):
            if work[i]:
                continue
            gp = 0.0
            gx = 0.0
            for a in range(n):
                gp += G[i, a] * p[a]
                gx += G[i, a] * x[a]
            if gp > 1e-14:
                s = (h[i] - gx) / gp
                if s < 0.0:
                    s = 0.0
                if s < step:
                    step = s
                    block = i
        for a in range(n):
            x[a] += step * p[a]
        if block >= 0:
            work[block] = True
    return x, lam, 1, max_iter


def _box_rows(n: int, beta: float):
    eye = np.eye(n)
    return np.vstack([eye, -eye]), np.full(2 * n, beta)


def find_feasible_point(G, h, beta) -> np.ndarray | None:
    """Point with G d <= h and |d| <= beta via an epigraph LP, or None."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float)
    mrow, n = G.shape
    A = np.hstack([G, -np.ones((mrow, 1))])
    top = max(0.0, float(np.max(-h, initial=0.0))) + 1.0
    lp = LpProblem(
        cost=np.r_[np.zeros(n), 1.0],
        A_ub=A,
        b_ub=h,
        lb=np.r_[np.full(n, -beta), 0.0],
        ub=np.r_[np.full(n, beta), top + np.abs(G).sum(axis=1).max(initial=0.0) * beta],
    )
    sol = solve_lp(lp)
    if sol.status != OPTIMAL or sol.x[-1] > 1e-10 * (1.0 + np.abs(h).max(initial=0.0)):
        return None
    return sol.x[:n]


def _least_norm_multipliers(H, q, Gall, hall, x, lam_ws, act_tol):
    """Canonical multipliers: least-norm solution on active rows when it is valid."""
    grad = H @ x + q
    slack = hall - Gall @ x
    act = np.flatnonzero(slack <= act_tol)
    if act.size == 0:
        return lam_ws
    GA = Gall[act]
    y, *_ = np.linalg.lstsq(GA.T, -grad, rcond=None)
    resid = np.linalg.norm(grad + GA.T @ y)
    scale = 1.0 + np.linalg.norm(grad)
    if np.all(y >= -1e-12) and resid <= 1e-10 * scale:
        lam = np.zeros_like(lam_ws)
        lam[act] = np.maximum(y, 0.0)
        return lam
    return lam_ws


def solve_qp(qp: QpProblem, x_start=None, max_iter: int = 500, tol: float = KERNEL_TOL) -> KernelSolution:
    """Minimize a strongly convex QP over linear rows and the beta box.

    ``x_start`` must be feasible when given; otherwise a phase-one LP finds one.
    Only the multipliers of the rows in ``qp.G`` are reported in
    ``multipliers``; the box multipliers are kept separately.
    """
    n = qp.n
    eig = np.linalg.eigvalsh(qp.H)
    if eig[0] <= 0.0:
        raise KernelError(f"QP quadratic term is not positive definite (min eigenvalue {eig[0]:.3e})")
    Gb, hb = _box_rows(n, qp.beta)
    Gall = np.ascontiguousarray(np.vstack([qp.G, Gb]))
    hall = np.ascontiguousarray(np.r_[qp.h, hb])
    m = qp.h.size

    if x_start is None:
        x0 = find_feasible_point(qp.G, qp.h, qp.beta)
        if x0 is None:
            return KernelSolution(np.zeros(n), np.zeros(m), np.nan, INFEASIBLE, 0)
    else:
        x0 = np.array(x_start, dtype=float).ravel()
        viol = np.max(Gall @ x0 - hall, initial=-np.inf)
        if viol > 1e-9 * (1.0 + np.abs(hall).max()):
            raise KernelError(f"QP start point is infeasible by {viol:.3e}")
        x0 = np.clip(x0, -qp.beta, qp.beta)

    x, lam, st, iters = active_set_core(qp.H, qp.q, Gall, hall, x0, max_iter, 1e-12)
    status = OPTIMAL if st == 0 else MAX_ITER
    if status == OPTIMAL:
        lam = _least_norm_multipliers(qp.H, qp.q, Gall, hall, x, lam, 1e-10 * (1.0 + np.abs(hall).max()))
    return KernelSolution(
        x=x,
        multipliers=lam[:m].copy(),
        objective=qp.objective(x),
        status=status,
        iterations=int(iters),
        box_multipliers=lam[m:].copy(),
    )


def qp_residuals(qp: QpProblem, sol: KernelSolution) -> dict:
    """Primal feasibility, stationarity and complementarity residuals of a QP solution."""
    x = sol.x
    rows = qp.G @ x - qp.h
    box = np.abs(x) - qp.beta
    lam_box = sol.box_multipliers if sol.box_multipliers.size else np.zeros(2 * qp.n)
    n = qp.n
    stat = qp.H @ x + qp.q + qp.G.T @ sol.multipliers + lam_box[:n] - lam_box[n:]
    comp_rows = np.abs(sol.multipliers * rows) if rows.size else np.zeros(0)
    comp_box = np.abs(lam_box * np.r_[x - qp.beta, -x - qp.beta])
    return {
        "primal": float(max(np.max(rows, initial=0.0), np.max(box, initial=0.0), 0.0)),
        "stationarity": float(np.linalg.norm(stat)),
        "complementarity": float(max(np.max(comp_rows, initial=0.0), np.max(comp_box, initial=0.0))),
        "min_multiplier": float(min(np.min(sol.multipliers, initial=0.0), np.min(lam_box, initial=0.0))),
    }
