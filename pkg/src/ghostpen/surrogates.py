"""Convex surrogate models of (f, g) around a base point.

The default model linearizes f and g and adds a proximal term (c/2)||d||^2.
User models go through the same interface; :func:`check_assumption_A` spot
checks the pointwise parts of their contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .problem import ProblemInstance

QUADRATIC_LINEAR = "quadratic_linear"
GENERAL_CONVEX = "general_convex"

# the open neighbourhood of the beta box on which models must be defined
NEIGHBOURHOOD_INFLATION = 1.01


@dataclass(frozen=True)
class SurrogateModelAt:
    """Surrogate pair at ``base_x``; gradients are taken w.r.t. the step d.

    For the quadratic/linear model ``linear_data`` holds
    ``(grad_f, g, jac_g)`` at the base point so kernels can build the LP/QP
    directly; it is ``None`` for general models.
    """

    base_x: np.ndarray
    eval_f_tilde: Callable
    grad1_f_tilde: Callable
    eval_g_tilde: Callable
    grad1_g_tilde: Callable
    c: float
    structure: str = GENERAL_CONVEX
    linear_data: tuple | None = None

    @property
    def n(self) -> int:
        return self.base_x.size

    @property
    def g0(self) -> np.ndarray:
        if self.linear_data is not None:
            return self.linear_data[1]
        return np.asarray(self.eval_g_tilde(np.zeros(self.n)), dtype=float)


def make_quadlin_surrogate(p: ProblemInstance, x, c: float = 1.0) -> SurrogateModelAt:
    """f~(d) = grad f(x)'d + (c/2)||d||^2,  g~(d) = g(x) + jac_g(x)'d."""
    if not c > 0:
        raise ValueError("surrogate modulus c must be positive")
    x = np.array(x, dtype=float).reshape(p.n)
    gf = p.gradf(x)
    gv = p.gval(x)
    J = p.jacg(x)
    for arr in (x, gf, gv, J):
        arr.setflags(write=False)
    c = float(c)

    def eval_f_tilde(d):
        d = np.asarray(d, dtype=float)
        return float(gf @ d + 0.5 * c * (d @ d))

    def grad1_f_tilde(d):
        return gf + c * np.asarray(d, dtype=float)

    def eval_g_tilde(d):
        return gv + J.T @ np.asarray(d, dtype=float)

    def grad1_g_tilde(d):
        return J

    return SurrogateModelAt(
        base_x=x,
        eval_f_tilde=eval_f_tilde,
        grad1_f_tilde=grad1_f_tilde,
        eval_g_tilde=eval_g_tilde,
        grad1_g_tilde=grad1_g_tilde,
        c=c,
        structure=QUADRATIC_LINEAR,
        linear_data=(gf, gv, J),
    )


PASS = "pass"
FAIL = "fail"
NOT_CHECKABLE = "not checkable pointwise"


def check_assumption_A(
    s: SurrogateModelAt,
    p: ProblemInstance,
    samples: int = 50,
    beta: float = 10.0,
    seed: int = 0,
    tol: float | None = None,
) -> dict:
    """Spot-check the pointwise model conditions at ``s.base_x``.

    Returns ``{condition: {"status": ..., "worst": margin}}`` for A1..A9;
    a negative worst margin means a violation. The continuity conditions
    (A2, A3, A6, A8) cannot be checked at a single base point.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if tol is None:
        tol = 1e-10 if s.structure == QUADRATIC_LINEAR else 1e-6
    n = s.n
    x = s.base_x
    rng = np.random.default_rng(seed)
    radius = NEIGHBOURHOOD_INFLATION * beta
    d1 = rng.uniform(-radius, radius, size=(samples, n))
    d2 = rng.uniform(-radius, radius, size=(samples, n))
    # axis-aligned pairs expose curvature deficits along single coordinates
    axis = np.zeros((n, n))
    np.fill_diagonal(axis, radius)
    d1 = np.vstack([d1, axis, 0.5 * axis])
    d2 = np.vstack([d2, -axis, np.zeros((n, n))])
    zero = np.zeros(n)
    out: dict = {}

    def verdict(worst):
        return {"status": PASS if worst >= -tol else FAIL, "worst": float(worst)}

    worst = np.inf
    for a, b in zip(d1, d2):
        diff = a - b
        lhs = (np.asarray(s.grad1_f_tilde(a)) - np.asarray(s.grad1_f_tilde(b))) @ diff
        worst = min(worst, (lhs - s.c * (diff @ diff)) / max(1.0, diff @ diff))
    out["A1"] = verdict(worst)

    fz = float(s.eval_f_tilde(zero))
    gz = np.asarray(s.grad1_f_tilde(zero), dtype=float)
    a4 = -np.max(np.abs(gz - p.gradf(x))) if np.isfinite(fz) else -np.inf
    out["A4"] = verdict(a4)

    worst = np.inf
    for a, b in zip(d1, d2):
        ga = np.asarray(s.eval_g_tilde(a), dtype=float)
        gb = np.asarray(s.eval_g_tilde(b), dtype=float)
        Ja = np.asarray(s.grad1_g_tilde(a), dtype=float).reshape(n, -1)
        worst = min(worst, float(np.min(gb - ga - Ja.T @ (b - a))) / max(1.0, float(np.abs(gb).max())))
    out["A5"] = verdict(worst)

    out["A7"] = verdict(-np.max(np.abs(np.asarray(s.eval_g_tilde(zero), dtype=float) - p.gval(x))))
    Jz = np.asarray(s.grad1_g_tilde(zero), dtype=float).reshape(n, -1)
    out["A9"] = verdict(-np.max(np.abs(Jz - p.jacg(x))))
    for k in ("A2", "A3", "A6", "A8"):
        out[k] = {"status": NOT_CHECKABLE, "worst": None}
    return dict(sorted(out.items()))
