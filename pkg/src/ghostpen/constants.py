"""Sample-based estimates of the problem-dependent constants over the box K."""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc

from .core import SurrogateFactory, direction_at, residual_constant_b
from .kernels.lipschitz import max_difference_quotient
from .problem import ANALYTIC, EMPIRICAL, ProblemConstants, ProblemInstance, SolverConfig
from .surrogates import NEIGHBOURHOOD_INFLATION, make_quadlin_surrogate


def sample_box(p: ProblemInstance, samples: int, seed: int = 0) -> np.ndarray:
    """Scrambled Halton points in K; a longer run extends a shorter one."""
    u = qmc.Halton(d=p.n, scramble=True, seed=seed).random(samples)
    return p.box_lo + u * (p.box_hi - p.box_lo)


def _sample_steps(n: int, samples: int, beta: float, seed: int) -> np.ndarray:
    r = NEIGHBOURHOOD_INFLATION * beta
    u = qmc.Halton(d=n, scramble=True, seed=seed + 7919).random(samples)
    return -r + 2.0 * r * u


def constant_step(L_grad_f: float, max_L_grad_g: float, M: float, cfg: SolverConfig) -> float:
    """Constant stepsize safety * 2 eta c / (L_f + M max L_g), capped at 1."""
    den = L_grad_f + M * max_L_grad_g
    if den <= 0.0:
        return 1.0
    return float(min(1.0, cfg.const_safety * 2.0 * cfg.etac / den))


def omega_for(gamma: float, L_grad_f: float, max_L_grad_g: float, M: float, cfg: SolverConfig) -> float:
    """Guaranteed decrease factor for W(.; 1/M) under the step gamma."""
    return float(cfg.etac - 0.5 * gamma * (L_grad_f + max_L_grad_g * M))


def estimate_constants(
    p: ProblemInstance,
    cfg: SolverConfig,
    samples: int | None = None,
    seed: int | None = None,
    x0=None,
    use_analytic: bool = True,
    surrogate: SurrogateFactory | None = None,
) -> ProblemConstants:
    """Fill every constant, preferring closed-form values from ``p.analytic``.

    Lipschitz moduli are the largest pairwise difference quotient of the
    relevant gradient over the sample (or the largest sampled gradient norm
    for plain Lipschitz moduli, whichever is larger). Surrogate moduli are
    sampled jointly over (d, x) with d in the inflated beta box.
    """
    samples = cfg.samples if samples is None else int(samples)
    seed = cfg.seed if seed is None else int(seed)
    if samples < 2:
        raise ValueError("samples must be >= 2")
    factory = surrogate or make_quadlin_surrogate
    an = p.analytic if use_analytic else {}
    prov: dict[str, str] = {}
    n, m = p.n, p.m
    X = sample_box(p, samples, seed)
    D = _sample_steps(n, samples, cfg.beta, seed)

    fv = np.array([p.fval(x) for x in X])
    GF = np.array([p.gradf(x) for x in X])
    GV = np.array([p.gval(x) for x in X])
    JG = np.array([p.jacg(x) for x in X])  # (S, n, m)

    def pick(name, empirical):
        if name in an:
            prov[name] = ANALYTIC
            return an[name]
        prov[name] = EMPIRICAL
        return empirical

    L_f = float(pick("L_grad_f", max_difference_quotient(X, GF)))
    if "L_grad_g" in an:
        L_g = np.asarray(an["L_grad_g"], dtype=float)
        prov["L_grad_g"] = ANALYTIC
    else:
        L_g = np.array([max_difference_quotient(X, JG[:, :, i]) for i in range(m)])
        prov["L_grad_g"] = EMPIRICAL

    # surrogate moduli, sampled over z = (d, x)
    Z = np.hstack([D, X])
    models = [factory(p, x, cfg.c) for x in X]
    FT = np.array([s.grad1_f_tilde(d) for s, d in zip(models, D)])
    GT = np.array([np.asarray(s.eval_g_tilde(d), dtype=float) for s, d in zip(models, D)])
    JT = np.array([np.asarray(s.grad1_g_tilde(d), dtype=float).reshape(n, m) for s, d in zip(models, D)])
    L_ft = max_difference_quotient(Z, FT)
    L_gt_grad = max(max_difference_quotient(Z, JT[:, :, i]) for i in range(m))
    L_gt = max(
        max(max_difference_quotient(Z, GT[:, i]) for i in range(m)),
        float(np.max(np.linalg.norm(JT, axis=1))),
    )
    for k in ("L_grad_tilde_f", "L_grad_tilde_g", "L_tilde_g"):
        prov[k] = EMPIRICAL

    # multiplier bound and the phi/||d|| ratio need the subproblems
    M = 0.0
    a = 0.0
    for x in X:
        dr = direction_at(p, x, cfg, surrogate)
        M = max(M, float(np.sum(np.abs(dr.xi))))
        if dr.phi > 0.0:
            a = max(a, dr.phi / dr.d_norm if dr.d_norm > 0.0 else np.inf)
    prov["M"] = EMPIRICAL
    prov["a"] = EMPIRICAL

    fm = float(pick("fm", float(fv.min())))
    fM = float(pick("fM", float(fv.max())))
    viol = np.maximum(GV.max(axis=1), 0.0)
    gM = float(pick("gM_plus", float(viol.max())))
    if "grad_f_norm_max" in an:
        gnorm = float(an["grad_f_norm_max"])
        prov["B"] = ANALYTIC
    else:
        gnorm = float(np.max(np.linalg.norm(GF, axis=1)))
        prov["B"] = EMPIRICAL
    B = gnorm * cfg.beta + cfg.etac * cfg.beta**2

    W = fv + M * viol
    Wm, WM = float(W.min()), float(W.max())
    if x0 is None:
        x0 = p.default_x0()
    x0 = np.asarray(x0, dtype=float)
    W0 = p.fval(x0) + M * p.max_violation(x0)
    Wm, WM = min(Wm, W0), max(WM, W0)
    for k in ("W0", "Wm", "WM"):
        prov[k] = EMPIRICAL

    gamma = constant_step(L_f, float(np.max(L_g)), M, cfg)
    omega = omega_for(gamma, L_f, float(np.max(L_g)), M, cfg)
    prov["omega"] = EMPIRICAL if prov["M"] == EMPIRICAL else ANALYTIC
    out = ProblemConstants(
        L_grad_f=L_f,
        L_grad_g=L_g,
        L_tilde_g=float(L_gt),
        L_grad_tilde_g=float(L_gt_grad),
        L_grad_tilde_f=float(L_ft),
        M=M,
        B=float(B),
        a=float(a),
        b=0.0,
        omega=omega,
        W0=float(W0),
        Wm=Wm,
        WM=WM,
        fm=fm,
        fM=fM,
        gM_plus=gM,
        gamma_const=gamma,
        x0=x0,
        provenance=prov,
        samples=samples,
        seed=seed,
    )
    out.b = residual_constant_b(out, cfg)
    prov["b"] = EMPIRICAL
    return out
