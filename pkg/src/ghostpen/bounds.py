"""Iteration-complexity predictions from the problem constants.

All counts are returned as floats so that astronomically large bounds stay
representable (``inf`` when a formula overflows).
"""

from __future__ import annotations

import math

from .constants import omega_for
from .problem import ProblemConstants, SolverConfig

LIPSCHITZ_FLOOR = 1e-12


def _ceil(v: float) -> float:
    return float(math.ceil(v)) if math.isfinite(v) else math.inf


def step_cap(constants: ProblemConstants, cfg: SolverConfig) -> float:
    """Largest admissible piecewise-constant step: eta c / max(L_f, eta c) <= 1."""
    return cfg.etac / max(constants.L_grad_f, cfg.etac)


def effective_max_L_grad_g(constants: ProblemConstants) -> tuple[float, bool]:
    """(max_i L_grad_g_i, floored?) with the floor applied to all-linear constraints."""
    L = constants.max_L_grad_g
    return (L, False) if L > 0.0 else (LIPSCHITZ_FLOOR, True)


def piecewise_step(T: float, constants: ProblemConstants, cfg: SolverConfig) -> float:
    """gamma = T eta c / (2 max L_g), never above the cap implied by the data line."""
    L, _ = effective_max_L_grad_g(constants)
    return min(T * cfg.etac / (2.0 * L), step_cap(constants, cfg))


def threshold_upper_limit(constants: ProblemConstants, cfg: SolverConfig) -> float:
    """Upper end of the admissible initial threshold; inf when constraints are linear."""
    L, floored = effective_max_L_grad_g(constants)
    if floored:
        return math.inf
    return 2.0 * L / max(constants.L_grad_f, cfg.etac)


def constant_step_bound(constants: ProblemConstants, cfg: SolverConfig, gamma: float | None = None) -> float:
    """ceil((W0 - Wm) / (gamma omega delta^2)) for the constant step rule."""
    k = constants
    gamma = k.gamma_const if gamma is None else gamma
    omega = omega_for(gamma, k.L_grad_f, k.max_L_grad_g, k.M, cfg)
    if omega <= 0.0:
        raise ValueError(f"step {gamma} gives non-positive decrease factor {omega}")
    return _ceil(max(k.W0 - k.Wm, 0.0) / (gamma * omega * cfg.delta**2))


def harmonic_window(constants: ProblemConstants, cfg: SolverConfig) -> tuple[float, float]:
    """(lower, upper) iteration window for gamma0 / (nu + 1) steps."""
    k = constants
    omega = omega_for(cfg.gamma0, k.L_grad_f, k.max_L_grad_g, k.M, cfg)
    if omega <= 0.0:
        raise ValueError("gamma0 too large for a positive decrease factor")
    A = max(k.W0 - k.Wm, 0.0) / (cfg.gamma0 * omega * cfg.delta**2)
    try:
        lo = float(math.floor(math.exp(A - 1.0)))
    except OverflowError:
        lo = math.inf
    try:
        hi = _ceil(math.exp(A))
    except OverflowError:
        hi = math.inf
    return lo, hi


def harmonic_burn_in(constants: ProblemConstants, cfg: SolverConfig) -> int:
    """Index after which harmonic steps satisfy the constant-step condition."""
    k = constants
    return int(math.ceil(cfg.gamma0 * (k.L_grad_f + k.M * k.max_L_grad_g) / (2.0 * cfg.etac))) - 1


def piecewise_bounds(constants: ProblemConstants, cfg: SolverConfig, T_init: float) -> dict:
    """Iteration bounds for the piecewise-constant algorithm.

    ``rare``: no threshold reduction ever happens. ``main``: the threshold is
    reduced at least once, hence stays above delta / (2B). Both equal the
    closed forms in the literature when the step cap is inactive; with the cap
    (all-linear constraints) the same argument runs with the capped step.
    """
    k = constants
    d = cfg.delta
    etac = cfg.etac
    spread = k.fM - k.fm
    g_rare = piecewise_step(T_init, k, cfg)
    rare = _ceil(4.0 / (g_rare * etac) * (spread + k.gM_plus / T_init) / d**2)
    T_low = d / (2.0 * k.B)
    g_main = piecewise_step(T_low, k, cfg)
    main = _ceil(4.0 / (g_main * etac) * (spread + k.gM_plus / T_low) / d**2)
    return {"rare": rare, "main": main, "bound": max(rare, main)}


def feasible_start_bound(constants: ProblemConstants, cfg: SolverConfig, T_init: float, f_x0: float) -> float:
    """Iterations to stop from a feasible start: 4 (f(x0) - fm) / (gamma eta c delta^2)."""
    g = piecewise_step(T_init, constants, cfg)
    return _ceil(4.0 * max(f_x0 - constants.fm, 0.0) / (g * cfg.etac * cfg.delta**2))


def smallest_linesearch_step(constants: ProblemConstants, cfg: SolverConfig) -> float:
    """G = (3 eta c / 4) / (L_f + 2 B max L_g / delta), capped at 1/2."""
    k = constants
    den = k.L_grad_f + 2.0 * k.B * k.max_L_grad_g / cfg.delta
    if den <= 0.0:
        return 0.5
    return min(0.5, 0.75 * cfg.etac / den)


def linesearch_bounds(constants: ProblemConstants, cfg: SolverConfig, T_init: float, gamma_init: float = 1.0) -> dict:
    """Iteration and W-evaluation budget for the line-search algorithm."""
    k = constants
    d = cfg.delta
    G = smallest_linesearch_step(k, cfg)
    spread = k.fM - k.fm
    scale = 4.0 / (G * cfg.etac)
    rare = _ceil(scale * (spread + k.gM_plus / T_init) / d**2)
    main = _ceil(scale * (spread + 2.0 * k.B * k.gM_plus / d) / d**2)
    halvings = max(0, math.ceil(math.log2(gamma_init / G)))
    it = max(rare, main)
    return {"G": G, "rare": rare, "main": main, "iterations": it, "halvings": halvings, "evaluations": it + halvings}


def theorem_bounds(constants: ProblemConstants, cfg: SolverConfig, mode: str, **kw):
    """Dispatch by mode: constant, harmonic, piecewise, feasible_start, linesearch."""
    if mode == "constant":
        return constant_step_bound(constants, cfg, kw.get("gamma"))
    if mode == "harmonic":
        return harmonic_window(constants, cfg)
    if mode == "piecewise":
        return piecewise_bounds(constants, cfg, kw["T_init"])
    if mode == "feasible_start":
        return feasible_start_bound(constants, cfg, kw["T_init"], kw["f_x0"])
    if mode == "linesearch":
        return linesearch_bounds(constants, cfg, kw.get("T_init", 1.0), kw.get("gamma_init", 1.0))
    raise ValueError(f"unknown bound mode {mode!r}")
