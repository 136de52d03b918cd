import csv
import json
import shutil

import numpy as np
import pytest

from ghostpen import SolverConfig, get_problem, run_algorithm1, run_algorithm2, run_algorithm3
from ghostpen.audit import all_hard_pass, audit_state, audit_trace
from ghostpen.constants import estimate_constants
from ghostpen.trace import load_run, read_trace_csv, trace_columns, write_run


def verdicts(results):
    return {r.name: r.verdict for r in results}


def from_disk(json_path, p):
    doc, recs, cfg, k = load_run(json_path)
    return audit_trace(p, recs, cfg, k, doc["algorithm"], doc["termination"], doc["info"].get("T_init"), doc["info"].get("gamma_init", 1.0))


@pytest.fixture
def alg1_run(tmp_path):
    p = get_problem("prob_A")
    cfg = SolverConfig(delta=1e-2, record_timing=False)
    k = estimate_constants(p, cfg)
    st = run_algorithm1(p, cfg, rule="constant", constants=k)
    st.constants = k
    csv_path, json_path = write_run(tmp_path, st, cfg, p.n, p.m)
    return p, cfg, k, st, csv_path, json_path


def test_columns_follow_record_order():
    cols = trace_columns(2, 3)
    assert cols[:4] == ["nu", "x_1", "x_2", "f"]
    assert cols.index("kappa") < cols.index("theta") < cols.index("d_norm") < cols.index("gamma")
    assert cols[-1] == "events"
    assert {"xi_1", "xi_2", "xi_3", "W_T", "T"} <= set(cols)


def test_round_trip_bitwise(alg1_run):
    p, cfg, k, st, csv_path, json_path = alg1_run
    back = read_trace_csv(csv_path)
    assert len(back) == len(st.trace)
    for a, b in zip(st.trace, back):
        assert np.array_equal(a.x, b.x) and np.array_equal(a.d, b.d) and np.array_equal(a.xi, b.xi)
        assert a.kappa == b.kappa and a.theta == b.theta and a.gamma == b.gamma and a.events == b.events
    doc = json.loads(json_path.read_text())
    assert doc["schema"] == 1 and doc["problem"] == "prob_A"


def test_fresh_alg1_trace_passes_everything(alg1_run):
    p, cfg, k, st, _, json_path = alg1_run
    mem = audit_state(p, st, cfg)
    assert all(r.passed for r in mem), [r.to_dict() for r in mem if not r.passed]
    disk = from_disk(json_path, p)
    assert [r.to_dict() for r in mem] == [r.to_dict() for r in disk]


def test_corrupted_update_detected(alg1_run, tmp_path):
    p, cfg, k, st, csv_path, json_path = alg1_run
    rows = list(csv.reader(csv_path.open()))
    col = rows[0].index("x_1")
    rows[2][col] = repr(float(rows[2][col]) + 1e-6)
    with csv_path.open("w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    res = {r.name: r for r in from_disk(json_path, p)}
    assert res["update_identity"].verdict == "FAIL"
    assert not all_hard_pass(list(res.values()))


def test_alg3_linesearch_verified(tmp_path):
    p = get_problem("nonconvex_2d")
    cfg = SolverConfig(delta=1e-3)
    st = run_algorithm3(p, cfg, T_init=5.0)
    res = {r.name: r for r in audit_state(p, st, cfg, estimate_constants(p, cfg))}
    assert res["linesearch_exit"].verdict == "pass"
    assert res["linesearch_exit"].checked == 2 * st.iterations
    assert res["threshold_monotone"].verdict == "pass"


def test_empirical_suites_are_advisory(alg1_run):
    p, cfg, k, st, _, _ = alg1_run
    res = {r.name: r for r in audit_state(p, st, cfg)}
    assert res["residual_bounds"].advisory and res["stop_quality"].advisory
    assert not res["update_identity"].advisory and not res["linesearch_exit"].advisory


def test_non_emfcq_residual_suites_skip():
    p = get_problem("prob_B")
    cfg = SolverConfig(delta=1e-2)
    st = run_algorithm3(p, cfg)
    res = {r.name: r for r in audit_state(p, st, cfg, estimate_constants(p, cfg))}
    assert res["residual_bounds"].verdict == "skip"


def test_deterministic_traces(tmp_path):
    p = get_problem("nonconvex_2d")
    cfg = SolverConfig(delta=1e-2, record_timing=False)
    paths = []
    for i in range(2):
        k = estimate_constants(p, cfg)
        st = run_algorithm2(p, cfg, constants=k)
        paths.append(write_run(tmp_path / str(i), st, cfg, p.n, p.m))
    for a, b in zip(*paths):
        assert a.read_bytes() == b.read_bytes()


def test_schema_checked(alg1_run, tmp_path):
    *_, json_path = alg1_run
    doc = json.loads(json_path.read_text())
    doc["schema"] = 99
    json_path.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        load_run(json_path)
