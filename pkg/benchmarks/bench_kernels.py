"""Compiled vs interpreted kernels.

Runs the same workload in two subprocesses, one with numba and one with
GHOSTPEN_NO_NUMBA=1, and checks that both produce identical numbers.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

WORKLOAD = r"""
import json, time, warnings
warnings.simplefilter("ignore")
import numpy as np
from ghostpen import SolverConfig, get_problem, estimate_constants, run_algorithm3
from ghostpen._jit import HAVE_NUMBA
from ghostpen.kernels.lipschitz import max_difference_quotient

def work():
    p = get_problem("nonconvex_2d")
    cfg = SolverConfig(delta=1e-3, record_timing=False)
    k = estimate_constants(p, cfg, use_analytic=False)
    run = run_algorithm3(p, cfg)
    rng = np.random.default_rng(0)
    X = rng.normal(size=(1500, 4)); V = np.sin(X) @ rng.normal(size=(4, 3))
    q = max_difference_quotient(X, V)
    return [k.L_grad_f, k.M, k.a, float(run.x.sum()), run.iterations, q]

t0 = time.perf_counter(); first = work(); t1 = time.perf_counter()
times = []
for _ in range(REPEAT):
    s = time.perf_counter(); again = work(); times.append(time.perf_counter() - s)
    assert again == first
print(json.dumps({"numba": HAVE_NUMBA, "first": t1 - t0, "best": min(times), "values": first}))
"""


def run(no_numba: bool, repeat: int) -> dict:
    env = dict(os.environ)
    if no_numba:
        env["GHOSTPEN_NO_NUMBA"] = "1"
    else:
        env.pop("GHOSTPEN_NO_NUMBA", None)
    out = subprocess.run(
        [sys.executable, "-c", WORKLOAD.replace("REPEAT", str(repeat))],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args(argv)
    t = time.perf_counter()
    jit = run(False, a.repeat)
    py = run(True, a.repeat)
    print(f"{'backend':<10}{'first run [s]':>15}{'best of ' + str(a.repeat) + ' [s]':>16}")
    print(f"{'numba':<10}{jit['first']:>15.3f}{jit['best']:>16.3f}")
    print(f"{'numpy':<10}{py['first']:>15.3f}{py['best']:>16.3f}")
    print(f"speed-up (warm): {py['best'] / jit['best']:.1f}x")
    agree = all(abs(u - v) <= 1e-9 * max(1.0, abs(u)) for u, v in zip(jit["values"], py["values"]))
    print(f"results agree: {agree}")
    print(f"total wall time {time.perf_counter() - t:.1f} s")
    return 0 if agree and jit["numba"] and not py["numba"] else 1


if __name__ == "__main__":
    sys.exit(main())
