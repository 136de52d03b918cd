"""Problem instances, problem-dependent constants and solver configuration."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable

import numpy as np


class OracleError(RuntimeError):
    """An oracle returned a non-finite value or an array of the wrong shape."""


class ConfigError(ValueError):
    pass


class OutsideBoxWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ProblemInstance:
    """min f(x) s.t. g(x) <= 0 with oracles for values and first derivatives.

    ``jac_g(x)`` returns the n-by-m matrix whose columns are the constraint
    gradients. ``box_lo``/``box_hi`` delimit the compact set on which the
    problem constants are defined and in which iterates are expected to stay.
    ``analytic`` maps constant names to closed-form values where known;
    ``emfcq`` records whether the extended MFCQ holds on the whole box.
    """

    name: str
    n: int
    m: int
    f: Callable
    grad_f: Callable
    g: Callable
    jac_g: Callable
    box_lo: np.ndarray
    box_hi: np.ndarray
    x0: np.ndarray | None = None
    analytic: dict = field(default_factory=dict)
    emfcq: bool | None = None
    description: str = ""

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("need n >= 1 and m >= 1")
        lo = np.asarray(self.box_lo, dtype=float).ravel()
        hi = np.asarray(self.box_hi, dtype=float).ravel()
        if lo.size != self.n or hi.size != self.n:
            raise ValueError(f"box bounds must have length n={self.n}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(lo < hi)):
            raise ValueError("box must be finite with box_lo < box_hi")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "box_lo", lo)
        object.__setattr__(self, "box_hi", hi)
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=float).ravel()
            x0.setflags(write=False)
            object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "analytic", dict(self.analytic))

    # checked oracle wrappers -------------------------------------------------

    def fval(self, x) -> float:
        v = float(self.f(x))
        if not np.isfinite(v):
            raise OracleError(f"{self.name}: f not finite at {x}")
        return v

    def _shaped(self, v, shape, what):
        v = np.asarray(v, dtype=float)
        if v.size != int(np.prod(shape)):
            raise OracleError(f"{self.name}: {what} has {v.size} entries, expected shape {shape}")
        return v.reshape(shape)

    def gradf(self, x) -> np.ndarray:
        v = self._shaped(self.grad_f(x), (self.n,), "grad f")
        if not np.all(np.isfinite(v)):
            raise OracleError(f"{self.name}: grad f not finite at {x}")
        return v

    def gval(self, x) -> np.ndarray:
        v = np.asarray(self.g(x), dtype=float).reshape(-1)
        if v.size != self.m:
            raise OracleError(f"{self.name}: g returned {v.size} values, expected {self.m}")
        if not np.all(np.isfinite(v)):
            raise OracleError(f"{self.name}: g not finite at {x}")
        return v

    def jacg(self, x) -> np.ndarray:
        v = self._shaped(self.jac_g(x), (self.n, self.m), "jac g")
        if not np.all(np.isfinite(v)):
            raise OracleError(f"{self.name}: jac g not finite at {x}")
        return v

    def max_violation(self, x) -> float:
        return float(max(np.max(self.gval(x)), 0.0))

    def in_box(self, x, slack: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.box_lo - slack) and np.all(x <= self.box_hi + slack))

    def warn_if_outside(self, x, where: str = "") -> None:
        if not self.in_box(x):
            warnings.warn(f"{self.name}: iterate {where} left the box K: {np.asarray(x)}", OutsideBoxWarning, stacklevel=3)

    def default_x0(self) -> np.ndarray:
        if self.x0 is not None:
            return np.array(self.x0)
        return 0.5 * (self.box_lo + self.box_hi)


ANALYTIC = "analytic"
EMPIRICAL = "empirical"

CONSTANT_NAMES = (
    "L_grad_f",
    "L_grad_g",
    "L_tilde_g",
    "L_grad_tilde_g",
    "L_grad_tilde_f",
    "M",
    "B",
    "a",
    "b",
    "omega",
    "W0",
    "Wm",
    "WM",
    "fm",
    "fM",
    "gM_plus",
)


@dataclass
class ProblemConstants:
    """Problem-dependent constants over the box K, each with a provenance flag.

    ``M`` bounds the l1 norm of the subproblem multipliers, which is the
    quantity the penalty-exactness argument needs (it also bounds the l2 norm
    used by the residual bounds). ``omega`` is tied to the constant step
    ``gamma_const``; ``W0`` to the starting point ``x0``.
    """

    L_grad_f: float
    L_grad_g: np.ndarray
    L_tilde_g: float
    L_grad_tilde_g: float
    L_grad_tilde_f: float
    M: float
    B: float
    a: float
    b: float
    omega: float
    W0: float
    Wm: float
    WM: float
    fm: float
    fM: float
    gM_plus: float
    gamma_const: float = float("nan")
    x0: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)
    samples: int = 0
    seed: int = 0

    @property
    def max_L_grad_g(self) -> float:
        return float(np.max(self.L_grad_g))

    def is_analytic(self, *names: str) -> bool:
        return all(self.provenance.get(k) == ANALYTIC for k in names)

    def with_start(self, x0, W0: float) -> "ProblemConstants":
        return replace(self, x0=np.asarray(x0, dtype=float), W0=float(W0))

    def to_dict(self) -> dict:
        out = {}
        for f_ in fields(self):
            v = getattr(self, f_.name)
            if isinstance(v, np.ndarray):
                v = v.tolist()
            out[f_.name] = v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemConstants":
        d = dict(d)
        d["L_grad_g"] = np.asarray(d["L_grad_g"], dtype=float)
        if d.get("x0") is not None:
            d["x0"] = np.asarray(d["x0"], dtype=float)
        return cls(**d)


STEP_RULES = ("constant", "harmonic", "power")


@dataclass(frozen=True)
class SolverConfig:
    """Parameters shared by the core quantities and the three drivers.

    ``T_init`` is the initial threshold T^{-1}; ``None`` lets each driver pick
    its documented default. Classification tolerances default to ``10*delta``.
    """

    lam: float = 0.5
    rho: float = 0.5
    beta: float = 10.0
    c: float = 1.0
    eta: float = 0.9
    delta: float = 1e-3
    rule: str = "harmonic"
    gamma0: float = 1.0
    power: float = 1.0
    T_init: float | None = None
    max_iters: int = 100_000
    tol_feas: float | None = None
    tol_stat: float | None = None
    tol_comp: float | None = None
    tol_act: float | None = None
    const_safety: float = 0.99
    samples: int = 400
    seed: int = 0
    record_timing: bool = True

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ConfigError("lambda must lie in (0, 1)")
        if not self.beta > 0.0:
            raise ConfigError("beta must be positive")
        if not 0.0 < self.rho < self.beta:
            raise ConfigError("rho must lie in (0, beta)")
        if not self.c > 0.0:
            raise ConfigError("c must be positive")
        if not 0.0 < self.eta <= 1.0:
            raise ConfigError("eta must lie in (0, 1]")
        if not 0.0 < self.delta <= 1.0:
            raise ConfigError("delta must lie in (0, 1]")
        if self.rule not in STEP_RULES:
            raise ConfigError(f"rule must be one of {STEP_RULES}")
        if not 0.0 < self.gamma0 <= 1.0:
            raise ConfigError("gamma0 must lie in (0, 1]")
        if not 0.5 < self.power <= 1.0:
            raise ConfigError("power exponent must lie in (0.5, 1]")
        if self.T_init is not None and not self.T_init > 0.0:
            raise ConfigError("T_init must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if not 0.0 < self.const_safety < 1.0:
            raise ConfigError("const_safety must lie in (0, 1)")
        if self.samples < 2:
            raise ConfigError("samples must be at least 2")
        for name in ("tol_feas", "tol_stat", "tol_comp", "tol_act"):
            v = getattr(self, name)
            if v is not None and not v > 0.0:
                raise ConfigError(f"{name} must be positive")

    @property
    def etac(self) -> float:
        return self.eta * self.c

    def class_tols(self) -> tuple[float, float, float]:
        base = max(10.0 * self.delta, 1e-8)
        return (
            self.tol_feas if self.tol_feas is not None else base,
            self.tol_stat if self.tol_stat is not None else base,
            self.tol_comp if self.tol_comp is not None else base,
        )

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)
