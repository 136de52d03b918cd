"""Outer iterations: diminishing/constant steps, the piecewise-constant
threshold rule and the constant-free line search."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    effective_max_L_grad_g,
    piecewise_bounds,
    piecewise_step,
    threshold_upper_limit,
)
from .constants import constant_step, estimate_constants
from .core import DirectionResult, SurrogateFactory, direction_at, ghost_penalty
from .problem import ConfigError, OracleError, ProblemConstants, ProblemInstance, SolverConfig

STOP_D = "stop_d"
STOP_THETA = "stop_theta"
MAX_ITERS = "max_iters"
STATIONARY_EXACT = "stationary_exact"

HALVING_CAP = 200


class HalvingCapError(RuntimeError):
    """The line search halved more often than theory allows for valid oracles."""


@dataclass
class IterationRecord:
    nu: int
    x: np.ndarray
    f: float
    viol: float
    kappa: float
    phi: float
    theta: float
    d_norm: float
    d: np.ndarray
    gamma: float
    T: float | None
    W_T: float | None
    xi_inf: float
    xi: np.ndarray
    grad_dot_d: float
    kernel_iters: int
    w_evals: int
    wall_time: float
    events: tuple = ()


@dataclass
class DriverState:
    algorithm: str
    problem: str
    x: np.ndarray
    nu: int = 0
    gamma: float = 0.0
    T: float | None = None
    halvings: int = 0
    w_evals: int = 0
    trace: list = field(default_factory=list)
    termination: str = ""
    final: DirectionResult | None = None
    constants: ProblemConstants | None = None
    info: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        """Number of steps taken (records minus the stopping record)."""
        return sum(1 for r in self.trace if r.gamma > 0.0)


def _start(p: ProblemInstance, x0) -> np.ndarray:
    x = p.default_x0() if x0 is None else np.array(x0, dtype=float).reshape(p.n)
    if not p.in_box(x):
        raise ValueError(f"x0={x} lies outside the box K of {p.name}")
    return x


def _record(nu, x, f, dr: DirectionResult, gamma, T, events, t0, w_evals, cfg, W_T=None):
    return IterationRecord(
        nu=nu,
        x=x.copy(),
        f=f,
        viol=dr.violation,
        kappa=dr.kappa,
        phi=dr.phi,
        theta=dr.theta,
        d_norm=dr.d_norm,
        d=dr.d.copy(),
        gamma=gamma,
        T=T,
        W_T=W_T,
        xi_inf=dr.xi_inf,
        xi=dr.xi.copy(),
        grad_dot_d=float(dr.grad_f @ dr.d),
        kernel_iters=dr.kernel_iterations,
        w_evals=w_evals,
        wall_time=(time.perf_counter() - t0) if cfg.record_timing else 0.0,
        events=tuple(events),
    )


def _advance(p: ProblemInstance, x, gamma, d, nu):
    x_new = x + gamma * d
    if not np.all(np.isfinite(x_new)):
        raise OracleError(f"non-finite iterate at step {nu}")
    p.warn_if_outside(x_new, f"{nu + 1}")
    return x_new


def _stop_test(dr: DirectionResult, cfg: SolverConfig):
    if dr.d_norm == 0.0:
        return STATIONARY_EXACT
    if dr.d_norm <= cfg.delta:
        return STOP_D
    return None


def _diminishing_step(rule: str, nu: int, cfg: SolverConfig) -> float:
    if rule == "harmonic":
        return cfg.gamma0 / (nu + 1)
    if rule == "power":
        return cfg.gamma0 / (nu + 1) ** cfg.power
    raise ValueError(rule)


def run_algorithm1(
    p: ProblemInstance,
    cfg: SolverConfig,
    rule: str | None = None,
    x0=None,
    constants: ProblemConstants | None = None,
    gamma: float | None = None,
    surrogate: SurrogateFactory | None = None,
) -> DriverState:
    """x <- x + gamma_nu d(x) until ||d|| <= delta.

    ``rule``: ``constant`` (step from the constants unless ``gamma`` is
    given), ``harmonic`` or ``power``.
    """
    rule = rule or cfg.rule
    if rule not in ("constant", "harmonic", "power"):
        raise ConfigError(f"unknown step rule {rule!r}")
    x = _start(p, x0)
    if rule == "constant" and gamma is None:
        constants = constants or estimate_constants(p, cfg, x0=x)
        gamma = constant_step(constants.L_grad_f, constants.max_L_grad_g, constants.M, cfg)
    if rule == "constant" and not 0.0 < gamma <= 1.0:
        raise ConfigError("constant step must lie in (0, 1]")
    st = DriverState(algorithm="const" if rule == "constant" else "1", problem=p.name, x=x, constants=constants)
    st.info["rule"] = rule
    if rule == "constant":
        st.info["gamma_const"] = gamma
    t0 = time.perf_counter()
    for nu in range(cfg.max_iters + 1):
        dr = direction_at(p, x, cfg, surrogate)
        f = p.fval(x)
        stop = _stop_test(dr, cfg)
        if stop is None and nu == cfg.max_iters:
            stop = MAX_ITERS
        if stop:
            st.trace.append(_record(nu, x, f, dr, 0.0, None, ("stopped",), t0, st.w_evals, cfg))
            st.termination, st.final, st.nu, st.x = stop, dr, nu, x
            return st
        step = gamma if rule == "constant" else _diminishing_step(rule, nu, cfg)
        st.trace.append(_record(nu, x, f, dr, step, None, (), t0, st.w_evals, cfg))
        st.gamma = step
        x = _advance(p, x, step, dr.d, nu)
    raise AssertionError("unreachable")


def _s3_ratio(dr: DirectionResult, cfg: SolverConfig):
    """Returns (q, theta / q) with q = grad f'd + eta c ||d||^2 (ratio None if q <= 0)."""
    q = float(dr.grad_f @ dr.d) + cfg.etac * float(dr.d @ dr.d)
    return q, (dr.theta / q if q > 0.0 else None)


def initial_threshold(p, cfg, constants, x0, feasible_start: bool, T_init=None) -> float:
    """Initial threshold T^{-1} for the piecewise-constant algorithm."""
    upper = threshold_upper_limit(constants, cfg)
    if feasible_start:
        if p.max_violation(x0) > 0.0:
            raise ConfigError("feasible_start requires a feasible x0")
        return min(cfg.delta / constants.B, upper)
    T = T_init if T_init is not None else cfg.T_init
    if T is None:
        return upper if math.isfinite(upper) else 1.0
    if not T > 0.0 or T > upper * (1.0 + 1e-12):
        raise ConfigError(f"initial threshold {T} outside (0, {upper}]")
    return float(T)


def run_algorithm2(
    p: ProblemInstance,
    cfg: SolverConfig,
    x0=None,
    feasible_start: bool = False,
    constants: ProblemConstants | None = None,
    T_init: float | None = None,
    surrogate: SurrogateFactory | None = None,
) -> DriverState:
    """Piecewise-constant steps driven by the threshold T."""
    x = _start(p, x0)
    constants = constants or estimate_constants(p, cfg, x0=x)
    T = initial_threshold(p, cfg, constants, x, feasible_start, T_init)
    gamma = piecewise_step(T, constants, cfg)
    _, floored = effective_max_L_grad_g(constants)
    pred = piecewise_bounds(constants, cfg, T)
    limit = int(min(cfg.max_iters, 10.0 * pred["bound"]))
    st = DriverState(algorithm="2", problem=p.name, x=x, constants=constants, T=T, gamma=gamma)
    st.info.update(T_init=T, gamma_init=gamma, lipschitz_floored=floored, predicted=pred, limit=limit)
    st.info["feasible_start"] = feasible_start
    t0 = time.perf_counter()
    for nu in range(limit + 1):
        dr = direction_at(p, x, cfg, surrogate)
        f = p.fval(x)
        stop = _stop_test(dr, cfg)
        events = []
        if stop is None:
            q, ratio = _s3_ratio(dr, cfg)
            if ratio is not None and T > ratio:
                if dr.theta <= cfg.delta:
                    stop = STOP_THETA
                else:
                    T = 0.5 * ratio
                    gamma = piecewise_step(T, constants, cfg)
                    events.append("T_reduced")
        if stop is None and nu == limit:
            stop = MAX_ITERS
        W_T = f + dr.violation / T
        if stop:
            st.trace.append(_record(nu, x, f, dr, 0.0, T, ("stopped",), t0, st.w_evals, cfg, W_T))
            st.termination, st.final, st.nu, st.x, st.T = stop, dr, nu, x, T
            return st
        st.trace.append(_record(nu, x, f, dr, gamma, T, events, t0, st.w_evals, cfg, W_T))
        st.T, st.gamma = T, gamma
        x = _advance(p, x, gamma, dr.d, nu)
    raise AssertionError("unreachable")


def run_algorithm3(
    p: ProblemInstance,
    cfg: SolverConfig,
    x0=None,
    T_init: float | None = None,
    surrogate: SurrogateFactory | None = None,
) -> DriverState:
    """Threshold rule plus a halving line search on W(.; T); needs no constants."""
    x = _start(p, x0)
    T = float(T_init if T_init is not None else (cfg.T_init if cfg.T_init is not None else 1.0))
    if not T > 0.0:
        raise ConfigError("initial threshold must be positive")
    gamma = 1.0
    st = DriverState(algorithm="3", problem=p.name, x=x, T=T, gamma=gamma)
    st.info.update(T_init=T, gamma_init=gamma)
    t0 = time.perf_counter()
    for nu in range(cfg.max_iters + 1):
        dr = direction_at(p, x, cfg, surrogate)
        f = p.fval(x)
        stop = _stop_test(dr, cfg)
        events = []
        if stop is None:
            q, ratio = _s3_ratio(dr, cfg)
            if ratio is not None and T > ratio:
                if dr.theta <= cfg.delta:
                    stop = STOP_THETA
                else:
                    T = 0.5 * ratio
                    events.append("T_reduced")
        if stop is None and nu == cfg.max_iters:
            stop = MAX_ITERS
        W_here = f + dr.violation / T
        if stop:
            st.trace.append(_record(nu, x, f, dr, 0.0, T, ("stopped",), t0, st.w_evals, cfg, W_here))
            st.termination, st.final, st.nu, st.x, st.T = stop, dr, nu, x, T
            return st
        dd = float(dr.d @ dr.d)
        target = cfg.etac / 4.0 * dd
        halved = 0
        while True:
            trial = x + gamma * dr.d
            st.w_evals += 1
            if ghost_penalty(p, trial, T) - W_here <= -gamma * target:
                break
            if halved == HALVING_CAP:
                raise HalvingCapError(f"{p.name}: more than {HALVING_CAP} halvings at step {nu}")
            gamma *= 0.5
            halved += 1
        st.halvings += halved
        if halved:
            events.append(f"gamma_halved:{halved}")
        st.trace.append(_record(nu, x, f, dr, gamma, T, events, t0, st.w_evals, cfg, W_here))
        st.T, st.gamma = T, gamma
        x = _advance(p, x, gamma, dr.d, nu)
    raise AssertionError("unreachable")
