"""Invariant suites evaluated over a recorded trace.

Every suite re-evaluates the problem oracles at the recorded iterates, so a
trace read back from disk yields the same verdicts as the in-memory one.
Suites whose right-hand side depends on empirically estimated constants are
marked advisory: a failure there is reported but does not fail the audit.
The direction checks assume the default quadratic-linear surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import constant_step_bound, linesearch_bounds, piecewise_bounds, piecewise_step, smallest_linesearch_step
from .constants import omega_for
from .core import residual_constant_b, stationarity_residuals
from .drivers import IterationRecord, STOP_D
from .problem import ProblemConstants, ProblemInstance, SolverConfig

KKT_PRIMAL_TOL = 1e-8
KKT_DUAL_TOL = 1e-10
KKT_COMP_TOL = 1e-8
THETA_SLACK = 1e-8
DESCENT_SLACK = 1e-10
LEMMA_SLACK = 1e-9


@dataclass
class AuditResult:
    name: str
    passed: bool
    worst_margin: float
    checked: int
    advisory: bool = False
    note: str = ""
    failures: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if self.checked == 0:
            return "skip"
        if self.passed:
            return "pass"
        return "advisory-fail" if self.advisory else "FAIL"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "verdict": self.verdict,
            "worst_margin": self.worst_margin,
            "checked": self.checked,
            "advisory": self.advisory,
            "note": self.note,
            "failures": self.failures[:10],
        }


class _Tally:
    """Accumulates margins (rhs - lhs, nonnegative is good)."""

    def __init__(self, name, advisory=False, note=""):
        self.name, self.advisory, self.note = name, advisory, note
        self.worst = math.inf
        self.n = 0
        self.bad = []

    def add(self, nu, margin, what=""):
        self.n += 1
        margin = float(margin) + 0.0
        if margin < self.worst or math.isnan(margin):
            self.worst = margin
        if not margin >= 0.0:
            self.bad.append({"nu": int(nu), "margin": margin, "what": what})

    def result(self) -> AuditResult:
        return AuditResult(self.name, not self.bad, self.worst, self.n, self.advisory, self.note, self.bad)


def _steps(records):
    """Records that were followed by an update."""
    return [r for r in records if r.gamma > 0.0]


def _empirical(constants, *names) -> bool:
    return constants is None or not constants.is_analytic(*names)


def audit_record_consistency(p, records) -> AuditResult:
    t = _Tally("record_consistency", note="f and max violation match the oracles")
    for r in records:
        t.add(r.nu, -abs(r.f - p.fval(r.x)), "f")
        t.add(r.nu, -abs(r.viol - p.max_violation(r.x)), "viol")
    return t.result()


def audit_kappa_sandwich(p, records) -> AuditResult:
    t = _Tally("kappa_sandwich", note="0 <= kappa <= max g+, feasible implies kappa = 0")
    for r in records:
        t.add(r.nu, r.kappa, "kappa >= 0")
        t.add(r.nu, r.viol - r.kappa, "kappa <= viol")
        if r.viol == 0.0:
            t.add(r.nu, -abs(r.kappa), "feasible kappa")
    return t.result()


def audit_direction_kkt(p, records, cfg: SolverConfig) -> AuditResult:
    t = _Tally("direction_feasibility", note="subproblem primal, dual and complementarity residuals")
    for r in records:
        g = p.gval(r.x)
        J = p.jacg(r.x)
        lin = g + J.T @ r.d - r.kappa
        t.add(r.nu, KKT_PRIMAL_TOL - max(float(np.max(lin, initial=-np.inf)), 0.0), "primal")
        t.add(r.nu, KKT_PRIMAL_TOL - max(float(np.max(np.abs(r.d), initial=0.0)) - cfg.beta, 0.0), "box")
        if r.xi.size:
            t.add(r.nu, KKT_DUAL_TOL + float(np.min(r.xi)), "dual")
            t.add(r.nu, KKT_COMP_TOL - float(np.max(np.abs(r.xi * lin))), "complementarity")
        free = np.abs(r.d) < cfg.beta * (1.0 - 1e-9)
        grad = p.gradf(r.x) + cfg.c * r.d + J @ r.xi
        scale = 1.0 + float(np.linalg.norm(p.gradf(r.x))) + float(np.sum(np.abs(r.xi)))
        t.add(r.nu, KKT_PRIMAL_TOL * scale - float(np.max(np.abs(grad[free]), initial=0.0)), "stationarity")
    return t.result()


def audit_theta(p, records, constants: ProblemConstants | None) -> AuditResult:
    """theta = viol - kappa exactly and theta <= L_tilde_g ||d|| + slack."""
    adv = _empirical(constants, "L_tilde_g")
    t = _Tally("theta_bound", advisory=adv, note="theta identity and theta <= L_tilde_g ||d||")
    for r in records:
        t.add(r.nu, -abs(r.theta - (r.viol - r.kappa)), "identity")
        t.add(r.nu, r.theta, "theta >= 0")
        if constants is not None:
            t.add(r.nu, constants.L_tilde_g * r.d_norm + THETA_SLACK - r.theta, "bound")
    return t.result()


def audit_update_identity(records) -> AuditResult:
    t = _Tally("update_identity", note="x_next = x + gamma d to rounding")
    eps = np.finfo(float).eps
    for a, b in zip(records[:-1], records[1:]):
        step = a.gamma * a.d
        err = np.abs(b.x - (a.x + step))
        tol = 4.0 * eps * (np.abs(a.x) + np.abs(step))
        t.add(a.nu, float(np.min(tol - err)), "update")
    return t.result()


def audit_descent(p, records, cfg, constants, algorithm) -> AuditResult:
    """W(.; 1/M) decreases by at least omega gamma ||d||^2 along constant steps."""
    t = _Tally("descent", advisory=_empirical(constants, "M", "L_grad_f", "L_grad_g"), note="penalty descent with eps = 1/M")
    if algorithm != "const" or constants is None or constants.M <= 0.0:
        return t.result()
    M = constants.M
    W = [r.f + M * r.viol for r in records]
    for i, r in enumerate(records[:-1]):
        om = omega_for(r.gamma, constants.L_grad_f, constants.max_L_grad_g, M, cfg)
        t.add(r.nu, -om * r.gamma * r.d_norm**2 + DESCENT_SLACK - (W[i + 1] - W[i]), "decrease")
    return t.result()


def audit_lemma5(p, records, cfg, constants) -> AuditResult:
    t = _Tally("residual_bounds", advisory=True, note="Lagrangian, feasibility and complementarity residuals vs b-terms times ||d|| (eMFCQ problems)")
    if constants is None or p.emfcq is False:
        return t.result()
    k, lam = constants, cfg.lam
    c_lag = k.L_grad_tilde_f + (k.L_grad_tilde_g + 1.0 / cfg.beta) * k.M
    c_feas = k.L_tilde_g / lam + k.a
    c_comp = (k.L_tilde_g * (1.0 + 2.0 * lam) / lam + k.a) * k.M
    for r in records:
        lag, feas, comp = stationarity_residuals(p, r.x, r.xi)
        t.add(r.nu, c_lag * r.d_norm + LEMMA_SLACK - lag, "lagrangian")
        t.add(r.nu, c_feas * r.d_norm + LEMMA_SLACK - feas, "feasibility")
        t.add(r.nu, c_comp * r.d_norm + LEMMA_SLACK - comp, "complementarity")
    return t.result()


def audit_stop_quality(p, records, cfg, constants, termination) -> AuditResult:
    t = _Tally("stop_quality", advisory=True, note="at stop_d every residual <= b delta (eMFCQ problems)")
    if termination != STOP_D or constants is None or not records or p.emfcq is False:
        return t.result()
    r = records[-1]
    b = residual_constant_b(constants, cfg)
    for name, v in zip(("lagrangian", "feasibility", "complementarity"), stationarity_residuals(p, r.x, r.xi)):
        t.add(r.nu, b * cfg.delta - v, name)
    return t.result()


def audit_linesearch(p, records, cfg, algorithm) -> AuditResult:
    t = _Tally("linesearch_exit", note="accepted steps satisfy the sufficient-decrease test")
    if algorithm != "3":
        return t.result()
    for r in _steps(records):
        T = r.T
        W_here = p.fval(r.x) + p.max_violation(r.x) / T
        t.add(r.nu, -abs(W_here - r.W_T), "recorded W")
        trial = r.x + r.gamma * r.d
        lhs = p.fval(trial) + p.max_violation(trial) / T - W_here
        rhs = -r.gamma * (cfg.etac / 4.0 * float(r.d @ r.d))
        t.add(r.nu, rhs - lhs, "decrease")
    return t.result()


def audit_threshold(records, cfg, constants, algorithm, T_init=None) -> AuditResult:
    """T nonincreasing, reductions only at tagged events, gamma consistent."""
    t = _Tally("threshold_monotone", note="T and gamma nonincreasing; reductions tagged")
    if algorithm not in ("2", "3"):
        return t.result()
    prev_T = T_init
    prev_g = None
    for r in records:
        if prev_T is not None:
            t.add(r.nu, prev_T - r.T, "T nonincreasing")
            reduced = r.T < prev_T
            tagged = "T_reduced" in r.events
            t.add(r.nu, 0.0 if reduced == tagged else -1.0, "reduction tag")
        prev_T = r.T
        if r.gamma > 0.0:
            if prev_g is not None:
                t.add(r.nu, prev_g - r.gamma, "gamma nonincreasing")
            prev_g = r.gamma
            if algorithm == "2" and constants is not None:
                t.add(r.nu, -abs(r.gamma - piecewise_step(r.T, constants, cfg)), "gamma formula")
    return t.result()


def audit_halvings(records, cfg, constants, algorithm, gamma_init=1.0) -> AuditResult:
    t = _Tally("halving_budget", advisory=_empirical(constants, "L_grad_f", "L_grad_g", "B"), note="total halvings <= ceil(log2(gamma_init / G))")
    if algorithm != "3" or constants is None or not records:
        return t.result()
    total = 0
    for r in records:
        for e in r.events:
            if e.startswith("gamma_halved:"):
                total += int(e.split(":")[1])
    G = smallest_linesearch_step(constants, cfg)
    budget = max(0, math.ceil(math.log2(gamma_init / G)))
    t.add(records[-1].nu, budget - total, "halvings")
    t.add(records[-1].nu, -abs(records[-1].w_evals - (len(_steps(records)) + total)), "evaluation count")
    return t.result()


def audit_iteration_bound(records, cfg, constants, algorithm, T_init=None) -> AuditResult:
    t = _Tally("iteration_bound", advisory=_empirical(constants, *("L_grad_f", "L_grad_g", "M", "fm", "fM", "gM_plus", "B")), note="iterations <= predicted bound")
    if constants is None or not records:
        return t.result()
    its = len(_steps(records))
    if algorithm == "const":
        gamma = records[0].gamma if records[0].gamma > 0 else constants.gamma_const
        t.add(records[-1].nu, constant_step_bound(constants, cfg, gamma) - its, "constant step")
    elif algorithm == "2" and T_init is not None:
        t.add(records[-1].nu, piecewise_bounds(constants, cfg, T_init)["bound"] - its, "piecewise")
    elif algorithm == "3" and T_init is not None:
        t.add(records[-1].nu, linesearch_bounds(constants, cfg, T_init)["iterations"] - its, "line search")
    return t.result()


def audit_finite(records) -> AuditResult:
    from .trace import finite_record

    t = _Tally("finite_fields", note="every numeric record field is finite")
    for r in records:
        t.add(r.nu, 0.0 if finite_record(r) else -1.0, "finite")
    return t.result()


def audit_trace(
    p: ProblemInstance,
    records: list[IterationRecord],
    cfg: SolverConfig,
    constants: ProblemConstants | None,
    algorithm: str,
    termination: str,
    T_init: float | None = None,
    gamma_init: float = 1.0,
) -> list[AuditResult]:
    """Run every suite; suites that do not apply report ``skip``."""
    return [
        audit_finite(records),
        audit_record_consistency(p, records),
        audit_kappa_sandwich(p, records),
        audit_direction_kkt(p, records, cfg),
        audit_theta(p, records, constants),
        audit_update_identity(records),
        audit_descent(p, records, cfg, constants, algorithm),
        audit_lemma5(p, records, cfg, constants),
        audit_stop_quality(p, records, cfg, constants, termination),
        audit_linesearch(p, records, cfg, algorithm),
        audit_threshold(records, cfg, constants, algorithm, T_init),
        audit_halvings(records, cfg, constants, algorithm, gamma_init),
        audit_iteration_bound(records, cfg, constants, algorithm, T_init),
    ]


def audit_state(p, state, cfg, constants=None) -> list[AuditResult]:
    """Audit an in-memory driver run."""
    constants = constants if constants is not None else state.constants
    return audit_trace(
        p,
        state.trace,
        cfg,
        constants,
        state.algorithm,
        state.termination,
        state.info.get("T_init"),
        state.info.get("gamma_init", 1.0),
    )


def all_hard_pass(results: list[AuditResult]) -> bool:
    return all(r.passed or r.advisory for r in results)
