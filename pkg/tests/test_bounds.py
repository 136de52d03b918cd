import math

import numpy as np
import pytest

from ghostpen import SolverConfig, get_problem
from ghostpen.bounds import (
    LIPSCHITZ_FLOOR,
    constant_step_bound,
    effective_max_L_grad_g,
    feasible_start_bound,
    harmonic_window,
    linesearch_bounds,
    piecewise_bounds,
    piecewise_step,
    smallest_linesearch_step,
    step_cap,
    theorem_bounds,
    threshold_upper_limit,
)
from ghostpen.constants import constant_step, estimate_constants
from ghostpen.problem import ProblemConstants


def toy(**kw):
    base = dict(L_grad_f=1.0, L_grad_g=np.array([1.0]), L_tilde_g=1.0, L_grad_tilde_g=0.0, L_grad_tilde_f=1.0,
                M=1.0, B=10.0, a=1.0, b=1.0, omega=0.4, W0=2.0, Wm=0.0, WM=2.0, fm=0.0, fM=1.0, gM_plus=1.0)
    base.update(kw)
    return ProblemConstants(**base)


def test_constant_bound_arithmetic():
    # omega = etac - gamma/2 (L_f + M L_g) = 0.4 with gamma = 0.1
    cfg = SolverConfig(eta=0.5, delta=0.1)
    k = toy(L_grad_f=1.0, L_grad_g=np.array([1.0]), M=1.0)
    assert cfg.etac - 0.05 * 2.0 == pytest.approx(0.4)
    assert constant_step_bound(k, cfg, gamma=0.1) == 5000


def test_constant_bound_inverse_in_gamma():
    cfg = SolverConfig(eta=1.0, delta=0.1)
    k = toy(L_grad_f=0.0, L_grad_g=np.array([0.0]))  # omega = etac independent of gamma
    assert constant_step_bound(k, cfg, 0.2) == pytest.approx(constant_step_bound(k, cfg, 0.1) / 2, abs=1)


def test_constant_bound_rejects_large_step():
    with pytest.raises(ValueError):
        constant_step_bound(toy(L_grad_f=10.0), SolverConfig(), gamma=1.0)


def test_harmonic_window_brackets():
    cfg = SolverConfig(eta=1.0, delta=1.0)
    lo, hi = harmonic_window(toy(W0=1.0, L_grad_f=0.0, L_grad_g=np.array([0.0])), cfg)
    assert lo == math.floor(math.exp(0.0)) and hi == math.ceil(math.e)
    lo, hi = harmonic_window(toy(W0=1e6), SolverConfig(delta=1e-3, gamma0=0.5))
    assert hi == math.inf


def test_harmonic_window_needs_small_gamma0():
    with pytest.raises(ValueError):
        harmonic_window(toy(), SolverConfig(gamma0=1.0))


def test_piecewise_step_and_limits():
    cfg = SolverConfig()
    k = toy(L_grad_f=2.0, L_grad_g=np.array([2.0]))
    assert threshold_upper_limit(k, cfg) == pytest.approx(2.0)
    assert piecewise_step(0.5, k, cfg) == pytest.approx(0.5 * 0.9 / 4.0)
    # cap: the formula would exceed eta c / max(L_f, eta c)
    assert piecewise_step(100.0, k, cfg) == pytest.approx(step_cap(k, cfg))
    lin = toy(L_grad_g=np.array([0.0, 0.0]))
    assert effective_max_L_grad_g(lin) == (LIPSCHITZ_FLOOR, True)
    assert threshold_upper_limit(lin, cfg) == math.inf
    assert 0 < piecewise_step(1.0, lin, cfg) <= 1.0


def test_piecewise_rare_case_formula():
    cfg = SolverConfig(delta=0.1)
    k = toy(L_grad_g=np.array([3.0]), L_grad_f=0.5, fM=2.0, fm=-1.0, gM_plus=4.0, B=1e9)
    T = 0.3
    expected = math.ceil(8.0 / (cfg.etac**2 * T) * 3.0 * (3.0 + 4.0 / T) / cfg.delta**2)
    assert piecewise_bounds(k, cfg, T)["rare"] == pytest.approx(expected, abs=1)


def test_piecewise_main_grows_like_delta_minus_four():
    k = toy(B=5.0)
    r1 = piecewise_bounds(k, SolverConfig(delta=1e-2), 0.1)["main"]
    r2 = piecewise_bounds(k, SolverConfig(delta=1e-3), 0.1)["main"]
    assert 0.9e4 <= r2 / r1 <= 1.1e4


def test_feasible_start_bound():
    cfg = SolverConfig(delta=0.1)
    k = toy()
    T = 0.01
    g = piecewise_step(T, k, cfg)
    assert feasible_start_bound(k, cfg, T, 1.0) == math.ceil(4 * 1.0 / (g * cfg.etac * 0.01))


def test_linesearch_bounds():
    cfg = SolverConfig(delta=0.1)
    k = toy(B=2.0)
    G = smallest_linesearch_step(k, cfg)
    assert G == pytest.approx(0.75 * 0.9 / (1.0 + 2 * 2.0 * 1.0 / 0.1))
    out = linesearch_bounds(k, cfg, 1.0)
    assert out["halvings"] == math.ceil(math.log2(1 / G))
    assert out["evaluations"] == out["iterations"] + out["halvings"]


def test_dispatch(prob_a):
    cfg = SolverConfig(delta=1e-2)
    k = estimate_constants(prob_a, cfg)
    assert theorem_bounds(k, cfg, "constant") == constant_step_bound(k, cfg)
    assert theorem_bounds(k, cfg, "piecewise", T_init=1.0) == piecewise_bounds(k, cfg, 1.0)
    assert isinstance(theorem_bounds(k, cfg.with_(gamma0=0.5), "harmonic"), tuple)
    assert theorem_bounds(k, cfg, "linesearch")["G"] > 0
    assert theorem_bounds(k, cfg, "feasible_start", T_init=1e-3, f_x0=2.25) > 0
    with pytest.raises(ValueError):
        theorem_bounds(k, cfg, "nope")
    with pytest.raises(KeyError):
        theorem_bounds(k, cfg, "piecewise")


def test_constant_step_formula(prob_a):
    cfg = SolverConfig()
    k = estimate_constants(prob_a, cfg)
    assert k.gamma_const == pytest.approx(min(1.0, 0.99 * 2 * 0.9 / (2.0 + k.M * 0.0)))
    assert constant_step(0.0, 0.0, 5.0, cfg) == 1.0
