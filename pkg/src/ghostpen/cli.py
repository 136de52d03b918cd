"""Command-line front end: solve, bench, check, constants."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .audit import all_hard_pass, audit_state, audit_trace
from .bounds import (
    constant_step_bound,
    feasible_start_bound,
    harmonic_window,
    linesearch_bounds,
    piecewise_bounds,
)
from .constants import estimate_constants
from .core import classify_point
from .drivers import MAX_ITERS, STATIONARY_EXACT, STOP_D, STOP_THETA, run_algorithm1, run_algorithm2, run_algorithm3
from .loader import load_problem
from .problem import ConfigError, SolverConfig
from .registry import get_problem
from .trace import SCHEMA, load_run, write_run

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MAX_ITERS = 2
ALGOS = ("1", "2", "3", "const")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(ap: argparse.ArgumentParser, single_problem=True) -> None:
    src = ap.add_mutually_exclusive_group()
    if single_problem:
        src.add_argument("--problem", help="registry problem name")
    else:
        src.add_argument("--problem", help="comma-separated registry problem names")
    src.add_argument("--problem-file", help="JSON problem file")
    ap.add_argument("--algo", choices=ALGOS, default="3")
    ap.add_argument("--rule", choices=("constant", "harmonic", "power"), default=None)
    ap.add_argument("--delta", type=float, default=1e-3)
    ap.add_argument("--gamma0", type=float, default=1.0)
    ap.add_argument("--power", type=float, default=1.0, help="exponent p of the power rule")
    ap.add_argument("--T0", type=float, default=None, help="initial threshold")
    ap.add_argument("--eta", type=float, default=0.9)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--lambda", dest="lam", type=float, default=0.5)
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--beta", type=float, default=10.0)
    ap.add_argument("--x0", type=_floats, default=None)
    ap.add_argument("--max-iters", type=int, default=100_000)
    ap.add_argument("--samples", type=int, default=400, help="sample size for constant estimation")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="ghostpen_out")
    ap.add_argument("--feasible-start", action="store_true")
    ap.add_argument("--no-timing", action="store_true", help="record zero wall time (byte-identical traces)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ghostpen", description="Ghost-penalty SQP-type solver and audit harness")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run one driver on one problem")
    _common(s)

    b = sub.add_parser("bench", help="sweep problems x algorithms x delta")
    _common(b, single_problem=False)
    b.add_argument("--algos", default="const,2,3", help="comma-separated algorithms")
    b.add_argument("--deltas", type=_floats, default=[1e-1, 1e-2, 1e-3])
    b.add_argument("--jobs", type=int, default=1)

    c = sub.add_parser("check", help="audit a trace or a fresh run")
    _common(c)
    c.add_argument("--trace", help="JSON sidecar of a recorded run")

    k = sub.add_parser("constants", help="estimate and print the problem constants")
    _common(k)
    k.add_argument("--empirical", action="store_true", help="ignore closed-form constants")
    return ap


def config_from_args(a) -> SolverConfig:
    rule = a.rule or ("constant" if a.algo == "const" else "harmonic")
    return SolverConfig(
        lam=a.lam,
        rho=a.rho,
        beta=a.beta,
        c=a.c,
        eta=a.eta,
        delta=a.delta,
        rule=rule,
        gamma0=a.gamma0,
        power=a.power,
        T_init=a.T0,
        max_iters=a.max_iters,
        samples=a.samples,
        seed=a.seed,
        record_timing=not a.no_timing,
    )


def resolve_problem(name: str | None, path: str | None):
    if path:
        return load_problem(path)
    return get_problem(name or "prob_A")


def _bounds_for(algo, constants, cfg, state, p):
    """Predicted iteration bounds (plus label) for the report."""
    keys = ("L_grad_f", "L_grad_g", "M", "fm", "fM", "gM_plus", "B")
    label = "analytic" if constants.is_analytic(*keys) else "empirical-constant"
    try:
        if algo == "const":
            out = {"iterations": constant_step_bound(constants, cfg, state.info.get("gamma_const"))}
        elif algo == "1":
            if cfg.rule == "harmonic":
                lo, hi = harmonic_window(constants, cfg)
                out = {"window": [lo, hi]}
            elif cfg.rule == "constant":
                out = {"iterations": constant_step_bound(constants, cfg, state.info.get("gamma_const"))}
            else:
                out = {}
        elif algo == "2":
            T = state.info["T_init"]
            if state.info.get("feasible_start"):
                out = {"iterations": feasible_start_bound(constants, cfg, T, p.fval(state.trace[0].x))}
            else:
                out = dict(piecewise_bounds(constants, cfg, T))
        else:
            out = dict(linesearch_bounds(constants, cfg, state.info["T_init"], state.info["gamma_init"]))
    except ValueError as exc:
        out = {"error": str(exc)}
    out["constants"] = label
    return out


def run_driver(p, algo: str, cfg: SolverConfig, x0=None, feasible_start=False):
    """Dispatch to a driver; returns (state, constants used for reporting)."""
    constants = estimate_constants(p, cfg, x0=x0 if x0 is not None else p.default_x0())
    if algo == "const":
        st = run_algorithm1(p, cfg, rule="constant", x0=x0, constants=constants)
    elif algo == "1":
        st = run_algorithm1(p, cfg, rule=cfg.rule, x0=x0, constants=constants)
    elif algo == "2":
        st = run_algorithm2(p, cfg, x0=x0, feasible_start=feasible_start, constants=constants)
    elif algo == "3":
        st = run_algorithm3(p, cfg, x0=x0)
    else:
        raise ConfigError(f"unknown algorithm {algo!r}")
    if st.constants is None:
        st.constants = constants
    return st, constants


def exit_code_for(termination: str) -> int:
    if termination in (STOP_D, STOP_THETA, STATIONARY_EXACT):
        return EXIT_OK
    if termination == MAX_ITERS:
        return EXIT_MAX_ITERS
    return EXIT_ERROR


def solve_report(p, algo, cfg, x0=None, feasible_start=False, out=None, problem_file=None) -> dict:
    st, constants = run_driver(p, algo, cfg, x0, feasible_start)
    final = classify_point(p, st.x, st.final, cfg)
    audits = audit_state(p, st, cfg, constants)
    report = {
        "schema": SCHEMA,
        "problem": p.name,
        "algorithm": algo,
        "config": cfg.to_dict(),
        "termination": st.termination,
        "x_final": st.x.tolist(),
        "final": final.to_dict(),
        "iterations": st.iterations,
        "w_evals": st.w_evals,
        "halvings": st.halvings,
        "predicted": _bounds_for(algo, constants, cfg, st, p),
        "audit": [r.to_dict() for r in audits],
        "trace_file": None,
    }
    if out is not None:
        stem = f"{p.name}_algo{algo}_delta{cfg.delta:g}"
        csv_path, json_path = write_run(out, st, cfg, p.n, p.m, problem_file, stem=stem)
        report["trace_file"] = str(csv_path)
        report["sidecar_file"] = str(json_path)
        (Path(out) / f"{stem}_report.json").write_text(json.dumps(_clean(report), indent=2))
    return _clean(report)


def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(t) for k, t in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(t) for t in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def cmd_solve(a) -> int:
    cfg = config_from_args(a)
    p = resolve_problem(a.problem, a.problem_file)
    rep = solve_report(p, a.algo, cfg, a.x0, a.feasible_start, a.out, a.problem_file)
    print(
        f"{rep['problem']} algo={rep['algorithm']} termination={rep['termination']} "
        f"iterations={rep['iterations']} w_evals={rep['w_evals']} classification={rep['final']['classification']}"
    )
    print(f"x = {rep['x_final']}")
    if rep["trace_file"]:
        print(f"trace: {rep['trace_file']}")
    return exit_code_for(rep["termination"])


def _bench_cell(job):
    name, path, algo, cfg_dict, x0, feasible = job
    warnings.simplefilter("ignore")
    p = resolve_problem(name, path)
    cfg = SolverConfig(**cfg_dict)
    st, constants = run_driver(p, algo, cfg, x0, feasible)
    pred = _bounds_for(algo, constants, cfg, st, p)
    bound = pred.get("iterations", pred.get("bound"))
    if bound is None and "window" in pred:
        bound = pred["window"][1]
    ok = None if bound is None else bool(st.iterations <= bound)
    extra = None
    if algo == "3":
        extra = bool(st.halvings <= pred["halvings"])
    return {
        "problem": p.name,
        "algo": algo,
        "delta": cfg.delta,
        "termination": st.termination,
        "iterations": st.iterations,
        "w_evals": st.w_evals,
        "halvings": st.halvings,
        "predicted": bound,
        "bound_ok": ok,
        "halvings_ok": extra,
        "constants": pred["constants"],
    }


def loglog_slope(deltas, iterations):
    """Least-squares slope of log(iterations) against log(1/delta); None below two points."""
    pts = [(math.log(1.0 / d), math.log(i)) for d, i in zip(deltas, iterations) if i > 0]
    if len(pts) < 2 or len({x for x, _ in pts}) < 2:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def bench_rows(problems, algos, deltas, base_cfg: SolverConfig, problem_file=None, x0=None, feasible=False, jobs=1):
    jobs_list = []
    names = [None] if problem_file else problems
    for name in names:
        for algo in algos:
            for d in deltas:
                cfg = base_cfg.with_(delta=d, rule="constant" if algo == "const" else base_cfg.rule)
                jobs_list.append((name, problem_file, algo, cfg.to_dict(), x0, feasible))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_bench_cell, jobs_list))
    else:
        rows = [_bench_cell(j) for j in jobs_list]
    slopes = {}
    for key in {(r["problem"], r["algo"]) for r in rows}:
        sel = [r for r in rows if (r["problem"], r["algo"]) == key]
        slopes[f"{key[0]}/{key[1]}"] = loglog_slope([r["delta"] for r in sel], [r["iterations"] for r in sel])
    for r in rows:
        r["slope"] = slopes[f"{r['problem']}/{r['algo']}"]
    return rows, slopes


def cmd_bench(a) -> int:
    base = config_from_args(a)
    problems = [s for s in (a.problem or "prob_A").split(",") if s]
    algos = [s for s in a.algos.split(",") if s]
    for al in algos:
        if al not in ALGOS:
            raise ConfigError(f"unknown algorithm {al!r}")
    rows, slopes = bench_rows(problems, algos, a.deltas, base, a.problem_file, a.x0, a.feasible_start, a.jobs)
    hdr = f"{'problem':<16}{'algo':<6}{'delta':>9}{'iters':>9}{'W-evals':>9}{'predicted':>14}{'ok':>6}  termination"
    print(hdr)
    for r in rows:
        pred = "-" if r["predicted"] is None else f"{r['predicted']:.4g}"
        ok = "-" if r["bound_ok"] is None else ("yes" if r["bound_ok"] else "NO")
        print(f"{r['problem']:<16}{r['algo']:<6}{r['delta']:>9.0e}{r['iterations']:>9}{r['w_evals']:>9}{pred:>14}{ok:>6}  {r['termination']}")
    print("log-log slope of iterations vs 1/delta:")
    for k, v in sorted(slopes.items()):
        print(f"  {k}: {'' if v is None else f'{v:.3f}'}")
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "bench.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    (out / "bench.json").write_text(json.dumps({"schema": SCHEMA, "rows": rows, "slopes": slopes}, indent=2))
    return EXIT_OK


def print_audit(results) -> None:
    for r in results:
        tag = " (advisory)" if r.advisory else ""
        print(f"{r.verdict:<14}{r.name:<22} worst margin {r.worst_margin: .3e} over {r.checked} checks{tag}")


def cmd_check(a) -> int:
    if a.trace:
        doc, records, cfg, constants = load_run(a.trace)
        p = resolve_problem(doc["problem"], doc.get("problem_file"))
        results = audit_trace(
            p, records, cfg, constants, doc["algorithm"], doc["termination"],
            doc["info"].get("T_init"), doc["info"].get("gamma_init", 1.0),
        )
    else:
        cfg = config_from_args(a)
        p = resolve_problem(a.problem, a.problem_file)
        st, constants = run_driver(p, a.algo, cfg, a.x0, a.feasible_start)
        results = audit_state(p, st, cfg, constants)
    print_audit(results)
    ok = all_hard_pass(results)
    print("all suites pass" if ok else "audit FAILED")
    return EXIT_OK if ok else EXIT_ERROR


def cmd_constants(a) -> int:
    cfg = config_from_args(a)
    p = resolve_problem(a.problem, a.problem_file)
    k = estimate_constants(p, cfg, x0=a.x0, use_analytic=not a.empirical)
    print(json.dumps(_clean(k.to_dict()), indent=2))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "check": cmd_check, "constants": cmd_constants}


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[a.command](a)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
