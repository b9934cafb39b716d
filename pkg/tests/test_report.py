"""Comparison math, emission determinism, and scale invariance."""

from __future__ import annotations

import json

import pytest

from acsim.engine import SimReport
from acsim.model import DESK_GPU, GpuConfig, KernelSpec, MemSegment, OverheadConfig, WorkloadTrace
from acsim.policies import (
    AcsSwPolicy,
    DagAheadPolicy,
    MultiStreamPolicy,
    PolicyRun,
    SerialPolicy,
    run_policy,
)
from acsim.report import ReportError, compare, emit, emit_to_string
from acsim.workloads import GeneratorParams, WorkloadKind, generate


def _rep(makespan, integral=0, legal=True, h="abc"):
    return SimReport(makespan_ns=makespan, active_warp_integral=integral,
                     legality_ok=legal, trace_hash=h)


def test_speedup_ratio():
    runs = [("serial", _rep(44_000_000_000)), ("acs-sw", _rep(24_000_000_000))]
    rep = compare(runs, "serial", DESK_GPU)
    by = {r.policy: r for r in rep.results}
    assert by["serial"].speedup == 1.0
    assert by["acs-sw"].speedup == pytest.approx(44 / 24)
    assert round(by["acs-sw"].speedup, 2) == 1.83


def test_self_comparison_is_unity():
    runs = [("serial", _rep(123456))]
    rep = compare(runs, "serial", DESK_GPU)
    assert rep.results[0].speedup == 1.0


def test_illegal_run_marks_report_invalid():
    runs = [("serial", _rep(100)), ("acs-hw", _rep(50, legal=False))]
    rep = compare(runs, "serial", DESK_GPU)
    assert not rep.valid


def test_missing_baseline_raises():
    with pytest.raises(ReportError):
        compare([("acs-hw", _rep(50))], "serial", DESK_GPU)


def test_trace_hash_mismatch_raises():
    with pytest.raises(ReportError):
        compare([("serial", _rep(100, h="aaa")), ("acs-hw", _rep(50, h="bbb"))],
                "serial", DESK_GPU)


def _real_reports(trace):
    ov = OverheadConfig()
    runs = []
    for policy in (SerialPolicy(), DagAheadPolicy()):
        runs.append((policy.name, run_policy(PolicyRun(policy, trace, DESK_GPU, ov, seed=1))))
    return compare(runs, "serial", DESK_GPU, workload="irregular", seed=1)


def test_csv_shape_and_determinism(tmp_path):
    trace = generate(GeneratorParams(kind=WorkloadKind.IRREGULAR_DAG, n_kernels=30, seed=1))
    report = _real_reports(trace)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit([report], "csv", str(a))
    emit([report], "csv", str(b))
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith("workload,seed,policy,makespan_ns,occupancy,speedup")
    assert len(lines) == 3  # header + 2 policies


def test_json_roundtrips(tmp_path):
    trace = generate(GeneratorParams(kind=WorkloadKind.IRREGULAR_DAG, n_kernels=30, seed=1))
    report = _real_reports(trace)
    path = tmp_path / "r.json"
    emit([report], "json", str(path), extra={"mode": "full"})
    parsed = json.loads(path.read_text())
    assert parsed["config"]["mode"] == "full"
    assert parsed["reports"][0]["baseline"] == "serial"
    assert len(parsed["reports"][0]["results"]) == 2
    assert parsed["reports"][0]["valid"] is True


def test_unknown_format_rejected():
    with pytest.raises(ReportError):
        emit_to_string([], "yaml")


def _scaled_trace(trace, c):
    ks = [
        KernelSpec(id=k.id, name=k.name, num_ctas=k.num_ctas,
                   warps_per_cta=k.warps_per_cta, cta_duration_ns=k.cta_duration_ns * c,
                   reads=k.reads, writes=k.writes)
        for k in trace.kernels
    ]
    return WorkloadTrace(kernels=tuple(ks), metadata=trace.metadata)


def test_speedups_scale_invariant():
    # clock 1.0 keeps every cycle-to-ns conversion integral under scaling
    gpu = GpuConfig(sm_count=8, max_ctas_per_sm=4, max_warps_per_sm=48, clock_ghz=1.0)
    c = 3
    ov = OverheadConfig(
        launch_ns=5000, sync_ns=5000, dag_build_ns_per_edge_check=2.0, cpu_dispatch_ns=500,
    )
    ov_scaled = OverheadConfig(
        launch_ns=5000 * c,
        sync_ns=5000 * c,
        depcheck_table_ns={
            w: tuple((s, cost * c) for s, cost in pts)
            for w, pts in ov.depcheck_table_ns.items()
        },
        hw_insert_cycles_per_slot=c,
        hw_update_cycles_per_slot=c,
        dag_build_ns_per_edge_check=2.0 * c,
        cpu_dispatch_ns=500 * c,
    )
    trace = generate(GeneratorParams(kind=WorkloadKind.IRREGULAR_DAG, n_kernels=50, seed=13))
    scaled = _scaled_trace(trace, c)
    policies = [SerialPolicy(), MultiStreamPolicy(streams=3), DagAheadPolicy(),
                AcsSwPolicy(scheduler_threads=3, window_n=8)]
    base = [(p.name, run_policy(PolicyRun(p, trace, gpu, ov))) for p in policies]
    big = [(p.name, run_policy(PolicyRun(p, scaled, gpu, ov_scaled))) for p in policies]
    rep_a = compare(base, "serial", gpu)
    rep_b = compare(big, "serial", gpu)
    for ra, rb in zip(rep_a.results, rep_b.results):
        assert ra.speedup == pytest.approx(rb.speedup, rel=1e-12)
        assert rb.makespan_ns == ra.makespan_ns * c
