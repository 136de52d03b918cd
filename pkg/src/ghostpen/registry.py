"""Built-in test problems with closed-form constants where they are easy to derive."""

from __future__ import annotations

import math

import numpy as np

from .problem import ProblemInstance


class UnknownProblemError(KeyError):
    def __str__(self):
        return f"unknown problem {self.args[0]!r}; available: {', '.join(names())}"


def _v(*a):
    return np.array(a, dtype=float)


def _prob_a():
    # min x^2  s.t. 1 - x <= 0; unique KKT point x* = 1 with multiplier 2
    return ProblemInstance(
        name="prob_A",
        n=1,
        m=1,
        f=lambda x: float(x[0] ** 2),
        grad_f=lambda x: _v(2.0 * x[0]),
        g=lambda x: _v(1.0 - x[0]),
        jac_g=lambda x: np.array([[-1.0]]),
        box_lo=_v(-2.0),
        box_hi=_v(2.0),
        x0=_v(0.0),
        analytic=dict(L_grad_f=2.0, L_grad_g=[0.0], fm=0.0, fM=4.0, gM_plus=3.0, grad_f_norm_max=4.0),
        emfcq=True,
        description="min x^2 s.t. 1 - x <= 0",
    )


def _prob_b():
    # infeasible everywhere; x = 0 minimizes the violation and grad g(0) = 0
    return ProblemInstance(
        name="prob_B",
        n=1,
        m=1,
        f=lambda x: 0.0,
        grad_f=lambda x: _v(0.0),
        g=lambda x: _v(x[0] ** 2 + 1.0),
        jac_g=lambda x: np.array([[2.0 * x[0]]]),
        box_lo=_v(-2.0),
        box_hi=_v(2.0),
        x0=_v(1.0),
        analytic=dict(L_grad_f=0.0, L_grad_g=[2.0], fm=0.0, fM=0.0, gM_plus=5.0, grad_f_norm_max=0.0),
        emfcq=False,
        description="min 0 s.t. x^2 + 1 <= 0 (infeasible)",
    )


def _prob_fj():
    # feasible set {0}; both constraint gradients at 0 are >= 0 while grad f = 1,
    # so no KKT multiplier exists but xi = (1, 0) annihilates grad g
    return ProblemInstance(
        name="prob_FJ",
        n=1,
        m=2,
        f=lambda x: float(x[0]),
        grad_f=lambda x: _v(1.0),
        g=lambda x: _v(x[0] ** 2, x[0]),
        jac_g=lambda x: np.array([[2.0 * x[0], 1.0]]),
        box_lo=_v(-2.0),
        box_hi=_v(2.0),
        x0=_v(0.0),
        analytic=dict(L_grad_f=0.0, L_grad_g=[2.0, 0.0], fm=-2.0, fM=2.0, gM_plus=4.0, grad_f_norm_max=1.0),
        emfcq=False,
        description="min x s.t. x^2 <= 0, x <= 0 (Fritz-John point at 0, not KKT)",
    )


def _prob_fj_linear():
    # linear constraints pinning x = 0; x = 0 is FJ and also KKT (xi = (0, 1))
    return ProblemInstance(
        name="prob_FJ_linear",
        n=1,
        m=2,
        f=lambda x: float(x[0]),
        grad_f=lambda x: _v(1.0),
        g=lambda x: _v(x[0], -x[0]),
        jac_g=lambda x: np.array([[1.0, -1.0]]),
        box_lo=_v(-2.0),
        box_hi=_v(2.0),
        x0=_v(0.0),
        analytic=dict(L_grad_f=0.0, L_grad_g=[0.0, 0.0], fm=-2.0, fM=2.0, gM_plus=2.0, grad_f_norm_max=1.0),
        emfcq=False,
        description="min x s.t. x <= 0, -x <= 0 (degenerate but KKT at 0)",
    )


def _nonconvex_2d():
    # saddle objective, convex disk plus a nonconvex hyperbolic constraint;
    # KKT point (1, 1) with multipliers (0.5, 0)
    def f(x):
        return float(-x[0] * x[1])

    def g(x):
        return _v(x[0] ** 2 + x[1] ** 2 - 2.0, 0.25 - x[0] * x[1])

    def jac_g(x):
        return np.array([[2.0 * x[0], -x[1]], [2.0 * x[1], -x[0]]])

    return ProblemInstance(
        name="nonconvex_2d",
        n=2,
        m=2,
        f=f,
        grad_f=lambda x: _v(-x[1], -x[0]),
        g=g,
        jac_g=jac_g,
        box_lo=_v(0.2, 0.2),
        box_hi=_v(2.0, 2.0),
        x0=_v(1.8, 0.3),
        analytic=dict(
            L_grad_f=1.0,
            L_grad_g=[2.0, 1.0],
            fm=-4.0,
            fM=-0.04,
            gM_plus=6.0,
            grad_f_norm_max=2.0 * math.sqrt(2.0),
        ),
        emfcq=True,
        description="min -x1 x2 s.t. x1^2 + x2^2 <= 2, x1 x2 >= 0.25",
    )


def _feasible_disk():
    # projection of (2, 1) onto the unit disk; x0 = 0 is strictly feasible
    return ProblemInstance(
        name="feasible_disk",
        n=2,
        m=1,
        f=lambda x: float((x[0] - 2.0) ** 2 + (x[1] - 1.0) ** 2),
        grad_f=lambda x: _v(2.0 * (x[0] - 2.0), 2.0 * (x[1] - 1.0)),
        g=lambda x: _v(x[0] ** 2 + x[1] ** 2 - 1.0),
        jac_g=lambda x: np.array([[2.0 * x[0]], [2.0 * x[1]]]),
        box_lo=_v(-1.5, -1.5),
        box_hi=_v(1.5, 1.5),
        x0=_v(0.0, 0.0),
        analytic=dict(L_grad_f=2.0, L_grad_g=[2.0], fm=0.25, fM=18.5, gM_plus=3.5, grad_f_norm_max=math.sqrt(74.0)),
        emfcq=True,
        description="min (x1-2)^2 + (x2-1)^2 s.t. x1^2 + x2^2 <= 1, strictly feasible start",
    )


_BUILDERS = {
    "prob_A": _prob_a,
    "prob_B": _prob_b,
    "prob_FJ": _prob_fj,
    "prob_FJ_linear": _prob_fj_linear,
    "nonconvex_2d": _nonconvex_2d,
    "feasible_disk": _feasible_disk,
}

_cache: dict[str, ProblemInstance] = {}


def names() -> list[str]:
    return list(_BUILDERS)


def get_problem(name: str) -> ProblemInstance:
    """Return the registered instance ``name`` (instances are immutable and shared)."""
    if name not in _BUILDERS:
        raise UnknownProblemError(name)
    if name not in _cache:
        _cache[name] = _BUILDERS[name]()
    return _cache[name]


def known_solution(name: str):
    """Closed-form minimizer for the problems that have one, else None."""
    return {
        "prob_A": _v(1.0),
        "nonconvex_2d": _v(1.0, 1.0),
        "feasible_disk": _v(2.0, 1.0) / math.sqrt(5.0),
        "prob_FJ": _v(0.0),
        "prob_FJ_linear": _v(0.0),
    }.get(name)
