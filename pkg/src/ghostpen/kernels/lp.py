"""Bounded-variable primal simplex (dense tableau, Bland's rule)."""

from __future__ import annotations

import numpy as np

from .._jit import kernel
from .base import INFEASIBLE, MAX_ITER, OPTIMAL, KernelError, KernelSolution, LpProblem

_PIVOT_TOL = 1e-12


@kernel
def _run_phase(tab, head, state, x, lo, hi, cost, max_iter, tol):
    """Pivot until no improving column remains. Returns (status, iterations).

    status: 0 optimal, 1 iteration limit, 3 unbounded.
    """
    m, N = tab.shape
    for it in range(max_iter):
        enter = -1
        dirn = 1.0
        for j in range(N):
            if state[j] == 0 or hi[j] - lo[j] <= 0.0:
                continue
            dj = cost[j]
            for i in range(m):
                dj -= cost[head[i]] * tab[i, j]
            if state[j] == 1 and dj < -tol:
                enter = j
                dirn = 1.0
                break
            if state[j] == 2 and dj > tol:
                enter = j
                dirn = -1.0
                break
        if enter < 0:
            return 0, it

        j = enter
        step = hi[j] - lo[j]
        leave = -1
        leave_up = False
        for i in range(m):
            a = dirn * tab[i, j]
            k = head[i]
            if a > _PIVOT_TOL:
                lim = (x[k] - lo[k]) / a
                up = False
            elif a < -_PIVOT_TOL:
                if hi[k] == np.inf:
                    continue
                lim = (hi[k] - x[k]) / (-a)
                up = True
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            if lim < step or (leave >= 0 and lim == step and k < head[leave]):
                step = lim
                leave = i
                leave_up = up
        if step == np.inf:
            return 3, it

        x[j] += dirn * step
        for i in range(m):
            x[head[i]] -= dirn * step * tab[i, j]

        if leave < 0:
            # bound flip, basis unchanged
            if dirn > 0:
                state[j] = 2
                x[j] = hi[j]
            else:
                state[j] = 1
                x[j] = lo[j]
            continue

        r = leave
        k = head[r]
        piv = tab[r, j]
        for col in range(N):
            tab[r, col] /= piv
        for i in range(m):
            if i != r:
                f = tab[i, j]
                if f != 0.0:
                    for col in range(N):
                        tab[i, col] -= f * tab[r, col]
        if leave_up:
            state[k] = 2
            x[k] = hi[k]
        else:
            state[k] = 1
            x[k] = lo[k]
        head[r] = j
        state[j] = 0
    return 1, max_iter


@kernel
def _refresh_basics(tab, head, state, x, A, b):
    # recompute basic values from the nonbasic ones: x_B = B^-1 (b - N x_N)
    m, n = A.shape
    rhs = b.copy()
    N = tab.shape[1]
    for j in range(N):
        if state[j] == 0:
            continue
        if j < n:
            for i in range(m):
                rhs[i] -= A[i, j] * x[j]
        elif j < n + m:
            rhs[j - n] -= x[j]
        else:
            rhs[j - n - m] += x[j]
    for i in range(m):
        v = 0.0
        for k in range(m):
            v += tab[i, n + k] * rhs[k]
        x[head[i]] = v


@kernel
def simplex_core(c, A, b, lb, ub, max_iter, tol):
    """min c x s.t. A x <= b, lb <= x <= ub.

    Returns (x, row_multipliers >= 0, status, iterations) with status
    0 optimal, 1 iteration limit, 2 infeasible, 3 unbounded.
    """
    m, n = A.shape
    N = n + 2 * m
    lo = np.zeros(N)
    hi = np.empty(N)
    for j in range(n):
        lo[j] = lb[j]
        hi[j] = ub[j]
    for j in range(n, N):
        hi[j] = np.inf
    x = np.zeros(N)
    for j in range(n):
        x[j] = lb[j]
    tab = np.zeros((m, N))
    head = np.empty(m, np.int64)
    state = np.ones(N, np.int64)
    phase1 = np.zeros(N)
    need_phase1 = False
    for i in range(m):
        r = b[i]
        for j in range(n):
            r -= A[i, j] * lb[j]
        sign = 1.0 if r >= 0.0 else -1.0
        for j in range(n):
            tab[i, j] = sign * A[i, j]
        tab[i, n + i] = sign
        tab[i, n + m + i] = -sign
        if r >= 0.0:
            head[i] = n + i
            x[n + i] = r
            hi[n + m + i] = 0.0
        else:
            head[i] = n + m + i
            x[n + m + i] = -r
            phase1[n + m + i] = 1.0
            need_phase1 = True
        state[head[i]] = 0

    total = 0
    if need_phase1:
        st, it = _run_phase(tab, head, state, x, lo, hi, phase1, max_iter, tol)
        total += it
        if st == 1:
            return x[:n].copy(), np.zeros(m), 1, total
        _refresh_basics(tab, head, state, x, A, b)
        infeas = 0.0
        for j in range(n + m, N):
            infeas += x[j]
        scale = 1.0
        for i in range(m):
            scale = max(scale, abs(b[i]))
        if infeas > 1e-9 * scale:
            return x[:n].copy(), np.zeros(m), 2, total
    # artificials are pinned at zero from here on
    for j in range(n + m, N):
        hi[j] = 0.0
        if state[j] != 0:
            x[j] = 0.0
            state[j] = 1

    cost = np.zeros(N)
    for j in range(n):
        cost[j] = c[j]
    st, it = _run_phase(tab, head, state, x, lo, hi, cost, max_iter - total, tol)
    total += it
    _refresh_basics(tab, head, state, x, A, b)

    # duals y = c_B B^-1; for <= rows of a min problem y <= 0
    mult = np.zeros(m)
    for i in range(m):
        y = 0.0
        for k in range(m):
            y += cost[head[k]] * tab[k, n + i]
        mult[i] = -y
    xs = x[:n].copy()
    for j in range(n):
        xs[j] = min(max(xs[j], lb[j]), ub[j])
    return xs, mult, st, total


def solve_lp(lp: LpProblem, max_iter: int = 10_000, tol: float = 1e-11) -> KernelSolution:
    """Solve a box-bounded LP; multipliers are the (nonnegative) row duals."""
    x, mult, st, iters = simplex_core(lp.cost, lp.A_ub, lp.b_ub, lp.lb, lp.ub, max_iter, tol)
    if st == 3:
        raise KernelError("LP reported unbounded despite finite variable bounds")
    status = {0: OPTIMAL, 1: MAX_ITER, 2: INFEASIBLE}[int(st)]
    return KernelSolution(
        x=x,
        multipliers=np.maximum(mult, 0.0) if status == OPTIMAL else mult,
        objective=float(lp.cost @ x),
        status=status,
        iterations=int(iters),
    )


def lp_dual_objective(lp: LpProblem, multipliers: np.ndarray) -> float:
    """Lagrangian dual value for row multipliers ``multipliers`` >= 0.

    With y = multipliers, the dual is  -b'y + sum_j min_{lb<=x<=ub} (c + A'y)_j x_j.
    """
    y = np.asarray(multipliers, dtype=float)
    r = lp.cost + lp.A_ub.T @ y
    return float(-lp.b_ub @ y + np.sum(np.where(r >= 0, r * lp.lb, r * lp.ub)))
