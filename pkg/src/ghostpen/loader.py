"""Problem files: JSON documents whose oracles are arithmetic expressions.

Grammar: ``+ - * / ^`` (``**`` is accepted too), unary minus, ``exp``,
``log``, ``sin``, ``cos``, variables ``x1..xn`` and numeric literals.
Expressions are screened with :mod:`ast` before sympy ever sees them, so a
problem file cannot execute arbitrary code.
"""

from __future__ import annotations

import ast
import json
import re
from pathlib import Path

import numpy as np
import sympy as sp

from .problem import ProblemInstance

_FUNCS = {"exp": sp.exp, "log": sp.log, "sin": sp.sin, "cos": sp.cos}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_VAR = re.compile(r"x([1-9][0-9]*)$")
FD_STEP = 1e-6


class ProblemFormatError(ValueError):
    """Malformed problem file or expression."""


class ProblemValidationError(ValueError):
    """Well-formed file describing an inconsistent problem."""


def _screen(expr: str, n: int) -> str:
    if not isinstance(expr, str) or not expr.strip():
        raise ProblemFormatError(f"expression must be a non-empty string, got {expr!r}")
    src = expr.replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ProblemFormatError(f"cannot parse {expr!r}: {exc.msg}") from None

    def visit(node):
        if isinstance(node, ast.Expression):
            return visit(node.body)
        if isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
            return visit(node.left) and visit(node.right)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            return visit(node.operand)
        if isinstance(node, ast.Constant) and type(node.value) in (int, float):
            return True
        if isinstance(node, ast.Name):
            mt = _VAR.match(node.id)
            if not mt:
                raise ProblemFormatError(f"unknown name {node.id!r} in {expr!r}")
            if int(mt.group(1)) > n:
                raise ProblemValidationError(f"variable {node.id} exceeds n={n} in {expr!r}")
            return True
        if isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
                raise ProblemFormatError(f"unsupported function call in {expr!r}")
            if len(node.args) != 1 or node.keywords:
                raise ProblemFormatError(f"{node.func.id} takes exactly one argument in {expr!r}")
            return visit(node.args[0])
        raise ProblemFormatError(f"unsupported syntax {type(node).__name__} in {expr!r}")

    visit(tree)
    return src


def _sympify(expr: str, syms, n: int):
    src = _screen(expr, n)
    local = {f"x{i + 1}": s for i, s in enumerate(syms)}
    local.update(_FUNCS)
    return sp.sympify(src, locals=local, rational=False)


def _central_grad(fun, x, n):
    x = np.asarray(x, dtype=float)
    out = []
    for j in range(n):
        h = FD_STEP * max(1.0, abs(x[j]))
        e = np.zeros(n)
        e[j] = h
        out.append((np.asarray(fun(x + e), dtype=float) - np.asarray(fun(x - e), dtype=float)) / (2 * h))
    return np.array(out)


def build_from_expressions(
    name: str,
    n: int,
    f: str,
    g: list[str],
    box_lo,
    box_hi,
    grad_mode: str = "symbolic",
    **extra,
) -> ProblemInstance:
    """Turn expression strings into a validated :class:`ProblemInstance`."""
    if grad_mode not in ("symbolic", "fd"):
        raise ProblemFormatError(f"grad_mode must be 'symbolic' or 'fd', got {grad_mode!r}")
    syms = sp.symbols(f"x1:{n + 1}")
    fe = _sympify(f, syms, n)
    ge = [_sympify(s, syms, n) for s in g]
    f_num = sp.lambdify(syms, fe, "numpy")
    g_num = [sp.lambdify(syms, e, "numpy") for e in ge]

    def fx(x):
        return float(f_num(*np.asarray(x, dtype=float)))

    def gx(x):
        x = np.asarray(x, dtype=float)
        return np.array([float(gi(*x)) for gi in g_num])

    if grad_mode == "symbolic":
        df = [sp.lambdify(syms, sp.diff(fe, s), "numpy") for s in syms]
        dg = [[sp.lambdify(syms, sp.diff(e, s), "numpy") for e in ge] for s in syms]

        def grad_f(x):
            x = np.asarray(x, dtype=float)
            return np.array([float(d(*x)) for d in df])

        def jac_g(x):
            x = np.asarray(x, dtype=float)
            return np.array([[float(d(*x)) for d in row] for row in dg])
    else:

        def grad_f(x):
            return _central_grad(fx, x, n)

        def jac_g(x):
            return _central_grad(gx, x, n).reshape(n, len(ge))

    return ProblemInstance(
        name=name,
        n=n,
        m=len(ge),
        f=fx,
        grad_f=grad_f,
        g=gx,
        jac_g=jac_g,
        box_lo=np.asarray(box_lo, dtype=float),
        box_hi=np.asarray(box_hi, dtype=float),
        **extra,
    )


def parse_problem(doc: dict) -> ProblemInstance:
    """Validate a decoded problem document and build the instance."""
    if not isinstance(doc, dict):
        raise ProblemFormatError("problem file must hold a JSON object")
    required = ("name", "n", "m", "f", "g", "box_lo", "box_hi")
    missing = [k for k in required if k not in doc]
    if missing:
        raise ProblemFormatError(f"missing fields: {', '.join(missing)}")
    n, m = doc["n"], doc["m"]
    if not (isinstance(n, int) and isinstance(m, int)) or n < 1 or m < 1:
        raise ProblemValidationError("n and m must be positive integers")
    g = doc["g"]
    if isinstance(g, str):
        g = [g]
    if not isinstance(g, list):
        raise ProblemFormatError("g must be a list of expressions")
    if len(g) != m:
        raise ProblemValidationError(f"g has {len(g)} entries but m={m}")
    lo = np.asarray(doc["box_lo"], dtype=float).ravel()
    hi = np.asarray(doc["box_hi"], dtype=float).ravel()
    if lo.size != n or hi.size != n:
        raise ProblemValidationError(f"box bounds must have length n={n}")
    if not np.all(lo < hi):
        raise ProblemValidationError("box_lo must be strictly below box_hi")
    extra = {}
    if "x0" in doc:
        x0 = np.asarray(doc["x0"], dtype=float).ravel()
        if x0.size != n:
            raise ProblemValidationError(f"x0 must have length n={n}")
        extra["x0"] = x0
    if "description" in doc:
        extra["description"] = str(doc["description"])
    p = build_from_expressions(
        str(doc["name"]), n, doc["f"], g, lo, hi, grad_mode=doc.get("grad_mode", "symbolic"), **extra
    )
    center = 0.5 * (lo + hi)
    try:
        vals = [p.f(center), *p.g(center), *np.ravel(p.grad_f(center)), *np.ravel(p.jac_g(center))]
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise ProblemValidationError(f"oracles fail at the box center: {exc}") from None
    if not np.all(np.isfinite(np.asarray(vals, dtype=float))):
        raise ProblemValidationError("oracle value not finite at the box center")
    return p


def load_problem(path) -> ProblemInstance:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_problem(doc)
