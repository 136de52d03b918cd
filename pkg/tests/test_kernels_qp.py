import numpy as np
import pytest
from scipy.optimize import minimize

from ghostpen.kernels import (
    INFEASIBLE,
    OPTIMAL,
    KernelError,
    QpProblem,
    find_feasible_point,
    qp_residuals,
    solve_convex_fallback,
    solve_qp,
)


def check_kkt(qp, sol, tol=1e-8):
    r = qp_residuals(qp, sol)
    assert r["primal"] <= tol
    assert r["stationarity"] <= tol * (1 + np.abs(qp.q).max())
    assert r["complementarity"] <= tol
    assert r["min_multiplier"] >= -1e-10


@pytest.mark.parametrize(
    "q,G,h,d,xi",
    [
        ([0.0], [[-1.0]], [-0.25], 0.25, 0.25),
        ([2.0], [[-1.0]], [0.0], 0.0, 2.0),
        ([2.0], [[1.0]], [9.0], -2.0, 0.0),
    ],
)
def test_one_dimensional_examples(q, G, h, d, xi):
    qp = QpProblem(H=[[1.0]], q=q, G=G, h=h, beta=10.0)
    sol = solve_qp(qp)
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(d, abs=1e-12)
    assert sol.multipliers[0] == pytest.approx(xi, abs=1e-12)
    check_kkt(qp, sol)


def grid_min(qp, h=1e-3):
    n = qp.n
    axis = np.arange(-qp.beta, qp.beta + h / 2, h)
    if n == 1:
        pts = axis[:, None]
    else:
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        pts = np.c_[X.ravel(), Y.ravel()]
    ok = np.all(pts @ qp.G.T <= qp.h + 1e-12, axis=1)
    pts = pts[ok]
    vals = 0.5 * np.einsum("ij,jk,ik->i", pts, qp.H, pts) + pts @ qp.q
    return vals.min()


@pytest.mark.parametrize("seed", range(10))
def test_grid_oracle_small_box(seed):
    rng = np.random.default_rng(100 + seed)
    n = 1 + seed % 2
    c = rng.uniform(0.5, 2.0)
    beta = 1.0
    G = rng.normal(size=(2, n))
    h = G @ rng.uniform(-0.5, 0.5, n) + rng.uniform(0.0, 0.3, 2)
    qp = QpProblem(H=c * np.eye(n), q=rng.normal(size=n), G=G, h=h, beta=beta)
    sol = solve_qp(qp)
    h_grid = 1e-3 if n == 1 else 4e-3
    best = grid_min(qp, h_grid)
    assert sol.objective <= best + 1e-12
    # the grid can miss the optimum by O(h) along active constraints
    assert best - sol.objective <= 10 * (np.abs(qp.q).max() + c * beta) * h_grid


@pytest.mark.parametrize("seed", range(30))
def test_random_against_slsqp(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(1, 5), rng.integers(1, 6)
    A = rng.normal(size=(n, n))
    H = A @ A.T + 0.5 * np.eye(n)
    G = rng.normal(size=(m, n))
    h = G @ rng.uniform(-1, 1, n) + rng.uniform(0, 0.5, m)
    qp = QpProblem(H=H, q=rng.normal(size=n) * 3, G=G, h=h, beta=2.0)
    sol = solve_qp(qp)
    assert sol.status == OPTIMAL
    check_kkt(qp, sol)
    ref = minimize(
        qp.objective,
        np.zeros(n) if np.all(h >= 0) else find_feasible_point(G, h, 2.0),
        jac=lambda d: H @ d + qp.q,
        bounds=[(-2.0, 2.0)] * n,
        constraints=[{"type": "ineq", "fun": lambda d: qp.h - qp.G @ d, "jac": lambda d: -qp.G}],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 500},
    )
    assert sol.objective <= ref.fun + 1e-7


def test_non_pd_rejected():
    with pytest.raises(KernelError):
        solve_qp(QpProblem(H=[[0.0]], q=[1.0], G=[[1.0]], h=[1.0], beta=1.0))


def test_infeasible_rows():
    qp = QpProblem(H=[[1.0]], q=[0.0], G=[[1.0], [-1.0]], h=[-1.0, -1.0], beta=5.0)
    assert solve_qp(qp).status == INFEASIBLE


def test_infeasible_start_rejected():
    qp = QpProblem(H=[[1.0]], q=[0.0], G=[[1.0]], h=[0.0], beta=5.0)
    with pytest.raises(KernelError):
        solve_qp(qp, x_start=[1.0])


def test_degenerate_rows_least_norm_multipliers():
    # two identical active rows: any split of the multiplier works, least norm halves it
    qp = QpProblem(H=[[1.0]], q=[0.0], G=[[-1.0], [-1.0]], h=[-1.0, -1.0], beta=10.0)
    sol = solve_qp(qp)
    assert sol.x[0] == pytest.approx(1.0)
    assert sol.multipliers == pytest.approx([0.5, 0.5])


def test_box_active_multipliers_separate():
    qp = QpProblem(H=[[1.0]], q=[-20.0], G=[[1.0]], h=[50.0], beta=3.0)
    sol = solve_qp(qp)
    assert sol.x[0] == pytest.approx(3.0)
    assert sol.multipliers[0] == 0.0
    assert sol.box_multipliers.max() == pytest.approx(17.0)


def test_deterministic():
    rng = np.random.default_rng(3)
    G = rng.normal(size=(4, 3))
    qp = QpProblem(H=np.eye(3), q=rng.normal(size=3), G=G, h=np.abs(rng.normal(size=4)), beta=1.0)
    a, b = solve_qp(qp), solve_qp(qp)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.multipliers, b.multipliers)


def test_fallback_matches_qp():
    rng = np.random.default_rng(7)
    G = rng.normal(size=(2, 2))
    h = np.array([0.3, 0.2])
    q = np.array([1.0, -2.0])
    qp = QpProblem(H=np.eye(2), q=q, G=G, h=h, beta=2.0)
    ref = solve_qp(qp)
    sol = solve_convex_fallback(
        qp.objective,
        lambda d: d + q,
        lambda d: G @ d - h,
        lambda d: G.T,
        np.full(2, -2.0),
        np.full(2, 2.0),
        strong_convexity=1.0,
        tol=1e-4,
    )
    assert abs(sol.objective - ref.objective) <= 1e-4
    assert np.all(G @ sol.x - h <= 1e-3)


def test_fallback_unconstrained_norm():
    sol = solve_convex_fallback(
        lambda d: 0.5 * d @ d,
        lambda d: d,
        lambda d: np.zeros(0),
        lambda d: np.zeros((3, 0)),
        -np.ones(3),
        np.ones(3),
        strong_convexity=1.0,
        x_start=np.array([0.7, -0.2, 0.9]),
        tol=1e-6,
    )
    assert np.linalg.norm(sol.x) <= 1e-2


def test_fallback_reports_max_iter():
    sol = solve_convex_fallback(
        lambda d: float(np.abs(d).sum()),
        lambda d: np.sign(d),
        lambda d: np.zeros(0),
        lambda d: np.zeros((2, 0)),
        -np.ones(2),
        np.ones(2),
        x_start=np.ones(2),
        tol=1e-12,
        max_iter=50,
    )
    assert sol.status == "max_iter"
