"""Projected subgradient on an exact-penalty reformulation.

Used only for user-supplied (general convex) surrogates; the quadratic/linear
model always goes through the simplex and active-set kernels.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .base import MAX_ITER, OPTIMAL, KernelSolution


def _run(obj, obj_grad, cons, cons_jac, lo, hi, mu, c, x0, tol, max_iter):
    diam = float(np.linalg.norm(hi - lo))
    x = x0.copy()
    best_x, best_val = x.copy(), np.inf
    avg = np.zeros_like(x)
    wsum = 0.0
    gmax = 0.0
    sum_a = 0.0
    sum_a2 = 0.0
    k = 0
    bound = np.inf
    for k in range(max_iter):
        gv = cons(x)
        viol = np.maximum(gv, 0.0)
        val = obj(x) + mu * viol.sum()
        if val < best_val:
            best_val, best_x = val, x.copy()
        s = obj_grad(x) + cons_jac(x) @ (mu * (gv > 0.0))
        gmax = max(gmax, float(np.linalg.norm(s)))
        if gmax == 0.0:
            return x, 0.0, k + 1
        if c > 0:
            # weighted averaging for strongly convex objectives: gap <= 2G^2 / (c (k+1))
            a = 2.0 / (c * (k + 2))
            avg += (k + 1) * x
            wsum += k + 1
            bound = 2.0 * gmax**2 / (c * (k + 1))
        else:
            a = diam / (gmax * np.sqrt(k + 1.0))
            sum_a += a
            sum_a2 += a * a
            bound = (diam**2 + gmax**2 * sum_a2) / (2.0 * sum_a)
        if bound <= tol:
            break
        x = np.clip(x - a * s, lo, hi)
    out = avg / wsum if c > 0 and wsum > 0 else best_x
    return out, bound, k + 1


def _recover_multipliers(obj_grad, cons, cons_jac, x, lo, hi, act_tol):
    gv = cons(x)
    act = np.flatnonzero(gv >= -act_tol)
    xi = np.zeros(gv.size)
    if act.size == 0:
        return xi
    # box rows that are active enter the least-squares system too
    free = (x > lo + act_tol) & (x < hi - act_tol)
    if not free.any():
        return xi
    J = cons_jac(x)[:, act]
    r = obj_grad(x)
    y, *_ = np.linalg.lstsq(J[free], -r[free], rcond=None)
    xi[act] = np.maximum(y, 0.0)
    return xi


def solve_convex_fallback(
    obj: Callable,
    obj_grad: Callable,
    cons: Callable,
    cons_jac: Callable,
    lo,
    hi,
    *,
    strong_convexity: float = 0.0,
    x_start=None,
    tol: float = 1e-4,
    max_iter: int = 200_000,
    penalty: float = 10.0,
    max_rounds: int = 5,
) -> KernelSolution:
    """Minimize ``obj`` subject to ``cons(x) <= 0`` and ``lo <= x <= hi``.

    ``cons_jac(x)`` returns the n-by-m matrix of constraint gradients. The
    penalty weight is raised whenever the recovered multipliers reach it,
    since the exact penalty is only exact above the largest multiplier.
    Status is ``max_iter`` when the certified gap bound never reaches ``tol``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    x0 = np.zeros_like(lo) if x_start is None else np.clip(np.asarray(x_start, dtype=float), lo, hi)
    mu = float(penalty)
    total = 0
    for _ in range(max_rounds):
        x, bound, iters = _run(obj, obj_grad, cons, cons_jac, lo, hi, mu, strong_convexity, x0, tol, max_iter)
        total += iters
        xi = _recover_multipliers(obj_grad, cons, cons_jac, x, lo, hi, max(tol, 1e-8))
        if xi.size == 0 or xi.max(initial=0.0) < 0.5 * mu:
            break
        mu *= 4.0
        x0 = x
    status = OPTIMAL if bound <= tol else MAX_ITER
    return KernelSolution(x=x, multipliers=xi, objective=float(obj(x)), status=status, iterations=total)
