import numpy as np
import pytest
from scipy.optimize import linprog

from ghostpen.kernels import INFEASIBLE, OPTIMAL, KernelError, LpProblem, lp_dual_objective, solve_lp


def epigraph(rows, rhs, rho):
    """min t s.t. t >= 0, t >= rhs_i + rows_i'd, |d| <= rho."""
    rows = np.atleast_2d(rows)
    m, n = rows.shape
    return LpProblem(
        cost=np.r_[np.zeros(n), 1.0],
        A_ub=np.hstack([rows, -np.ones((m, 1))]),
        b_ub=-np.asarray(rhs, float),
        lb=np.r_[np.full(n, -rho), 0.0],
        ub=np.r_[np.full(n, rho), 10.0],
    )


def test_half_unit_violation():
    sol = solve_lp(epigraph([[-1.0]], [1.0], 0.5))
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(0.5, abs=1e-12)
    assert sol.x[0] == pytest.approx(0.5, abs=1e-12)


def test_already_satisfied():
    sol = solve_lp(epigraph([[-1.0]], [-1.0], 0.5))
    assert sol.objective == pytest.approx(0.0, abs=1e-12)


def test_conflicting_rows():
    sol = solve_lp(epigraph([[1.0], [-1.0]], [1.0, 1.0], 0.5))
    assert sol.objective == pytest.approx(1.0, abs=1e-12)


def random_lp(rng, n, m):
    A = rng.normal(size=(m, n))
    x_feas = rng.uniform(-1, 1, n)
    b = A @ x_feas + rng.uniform(0, 1, m)
    return LpProblem(cost=rng.normal(size=n), A_ub=A, b_ub=b, lb=np.full(n, -2.0), ub=np.full(n, 2.0))


@pytest.mark.parametrize("seed", range(40))
def test_matches_highs_and_strong_duality(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(1, 6), rng.integers(1, 8)
    lp = random_lp(rng, n, m)
    ours = solve_lp(lp)
    ref = linprog(lp.cost, A_ub=lp.A_ub, b_ub=lp.b_ub, bounds=list(zip(lp.lb, lp.ub)), method="highs")
    assert ours.status == OPTIMAL and ref.status == 0
    assert ours.objective == pytest.approx(ref.fun, abs=1e-8)
    assert np.all(lp.A_ub @ ours.x <= lp.b_ub + 1e-9)
    assert np.all(ours.multipliers >= 0)
    assert abs(lp_dual_objective(lp, ours.multipliers) - ours.objective) <= 1e-8


def test_infeasible_flagged():
    lp = LpProblem(cost=[1.0], A_ub=[[1.0]], b_ub=[-5.0], lb=[-1.0], ub=[1.0])
    assert solve_lp(lp).status == INFEASIBLE


def test_degenerate_ties_are_deterministic():
    rows = np.array([[1.0, 1.0], [1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    lp = epigraph(rows, [1.0, 1.0, 0.0, 0.0], 0.5)
    a, b = solve_lp(lp), solve_lp(lp)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.multipliers, b.multipliers)


def test_dimension_errors():
    with pytest.raises(KernelError):
        LpProblem(cost=[1.0, 2.0], A_ub=[[1.0]], b_ub=[1.0], lb=[0, 0], ub=[1, 1])
    with pytest.raises(KernelError):
        LpProblem(cost=[1.0], A_ub=[[1.0]], b_ub=[1.0], lb=[-np.inf], ub=[1.0])
    with pytest.raises(KernelError):
        LpProblem(cost=[1.0], A_ub=[[1.0]], b_ub=[1.0], lb=[2.0], ub=[1.0])
