"""Trace schema, round-trips, and validation errors."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acsim.model import (
    U64_MAX,
    WHOLE_MEMORY,
    GpuConfig,
    KernelSpec,
    MemSegment,
    OverheadConfig,
    TraceError,
    WorkloadTrace,
    load_trace,
    save_trace,
)
from acsim.workloads import GeneratorParams, WorkloadKind, generate


def _write_lines(path, *lines):
    path.write_text("\n".join(lines) + "\n")


def test_segment_validation():
    MemSegment(0, 1)
    MemSegment(U64_MAX - 1, 1)
    with pytest.raises(ValueError):
        MemSegment(-1, 4)
    with pytest.raises(ValueError):
        MemSegment(0, -1)
    with pytest.raises(ValueError):
        MemSegment(U64_MAX, 2)  # end overflows


def test_whole_memory_constant():
    assert WHOLE_MEMORY.start == 0
    assert WHOLE_MEMORY.size == U64_MAX
    assert WHOLE_MEMORY.end == U64_MAX


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(id=0, name="k", num_ctas=0, warps_per_cta=1, cta_duration_ns=1)
    with pytest.raises(ValueError):
        KernelSpec(id=0, name="k", num_ctas=1, warps_per_cta=0, cta_duration_ns=1)
    with pytest.raises(ValueError):
        KernelSpec(id=0, name="k", num_ctas=1, warps_per_cta=1, cta_duration_ns=0)


def test_trace_requires_dense_ids():
    k = KernelSpec(id=1, name="k", num_ctas=1, warps_per_cta=1, cta_duration_ns=1)
    with pytest.raises(ValueError):
        WorkloadTrace(kernels=(k,))


def test_minimal_record_roundtrip(tmp_path):
    path = tmp_path / "t.trace"
    _write_lines(
        path,
        json.dumps({"format_version": 1}),
        json.dumps({
            "id": 0, "num_ctas": 1, "warps_per_cta": 1, "cta_duration_ns": 1000,
            "reads": [], "writes": [{"start": 0, "size": 64}],
        }),
    )
    trace = load_trace(str(path))
    assert len(trace) == 1
    k = trace.kernels[0]
    assert k.reads == ()
    assert k.writes == (MemSegment(0, 64),)


def test_missing_reads_and_writes_falls_back_to_whole_memory(tmp_path):
    path = tmp_path / "t.trace"
    _write_lines(
        path,
        json.dumps({"format_version": 1}),
        json.dumps({"id": 0, "num_ctas": 2, "warps_per_cta": 4, "cta_duration_ns": 500}),
    )
    trace = load_trace(str(path))
    assert trace.kernels[0].writes == (WHOLE_MEMORY,)
    assert trace.kernels[0].reads == ()


def test_whole_memory_marker_roundtrip(tmp_path):
    k = KernelSpec(id=0, name="k", num_ctas=1, warps_per_cta=1,
                   cta_duration_ns=10, writes=(WHOLE_MEMORY,))
    trace = WorkloadTrace(kernels=(k,))
    path = tmp_path / "t.trace"
    save_trace(trace, str(path))
    assert '"whole_memory"' in path.read_text()
    assert load_trace(str(path)) == trace


def test_generated_trace_roundtrip(tmp_path):
    trace = generate(GeneratorParams(kind=WorkloadKind.IRREGULAR_DAG, n_kernels=100, seed=9))
    path = tmp_path / "g.trace"
    save_trace(trace, str(path))
    assert load_trace(str(path)) == trace


def test_empty_trace_roundtrip(tmp_path):
    trace = WorkloadTrace(kernels=(), metadata={"generator": "none", "seed": 0})
    path = tmp_path / "e.trace"
    save_trace(trace, str(path))
    loaded = load_trace(str(path))
    assert loaded == trace
    assert path.read_text().count("\n") == 1  # metadata line only


def test_parse_error_reports_line_number(tmp_path):
    path = tmp_path / "bad.trace"
    _write_lines(path, json.dumps({"format_version": 1}), "{not json")
    with pytest.raises(TraceError, match="line 2"):
        load_trace(str(path))


def test_zero_fields_rejected(tmp_path):
    path = tmp_path / "bad.trace"
    _write_lines(
        path,
        json.dumps({"format_version": 1}),
        json.dumps({"id": 0, "num_ctas": 0, "warps_per_cta": 1, "cta_duration_ns": 1}),
    )
    with pytest.raises(TraceError, match="num_ctas"):
        load_trace(str(path))


def test_non_dense_ids_rejected(tmp_path):
    path = tmp_path / "bad.trace"
    _write_lines(
        path,
        json.dumps({"format_version": 1}),
        json.dumps({"id": 0, "num_ctas": 1, "warps_per_cta": 1, "cta_duration_ns": 1, "writes": []}),
        json.dumps({"id": 2, "num_ctas": 1, "warps_per_cta": 1, "cta_duration_ns": 1, "writes": []}),
    )
    with pytest.raises(TraceError, match="dense"):
        load_trace(str(path))


def test_unknown_fields_ignored(tmp_path):
    path = tmp_path / "t.trace"
    _write_lines(
        path,
        json.dumps({"format_version": 1}),
        json.dumps({"id": 0, "num_ctas": 1, "warps_per_cta": 1, "cta_duration_ns": 1,
                    "reads": [], "writes": [], "color": "green"}),
    )
    assert len(load_trace(str(path))) == 1


segments = st.builds(
    MemSegment,
    start=st.integers(min_value=0, max_value=2**20),
    size=st.integers(min_value=1, max_value=2**16),
)


@given(
    reads=st.lists(segments, max_size=4).map(tuple),
    writes=st.lists(segments, max_size=4).map(tuple),
    num_ctas=st.integers(1, 500),
    warps=st.integers(1, 32),
    dur=st.integers(1, 10**6),
)
@settings(max_examples=60)
def test_single_kernel_roundtrip_property(tmp_path_factory, reads, writes, num_ctas, warps, dur):
    trace = WorkloadTrace(kernels=(
        KernelSpec(id=0, name="k0", num_ctas=num_ctas, warps_per_cta=warps,
                   cta_duration_ns=dur, reads=reads, writes=writes),
    ))
    path = tmp_path_factory.mktemp("rt") / "t.trace"
    save_trace(trace, str(path))
    assert load_trace(str(path)) == trace


def test_gpu_config_validation():
    with pytest.raises(ValueError):
        GpuConfig(sm_count=0, max_ctas_per_sm=1, max_warps_per_sm=1, clock_ghz=1.0)
    with pytest.raises(ValueError):
        GpuConfig(sm_count=1, max_ctas_per_sm=1, max_warps_per_sm=1, clock_ghz=0)


def test_cycles_to_ns_exact_rational():
    gpu = GpuConfig(sm_count=1, max_ctas_per_sm=1, max_warps_per_sm=1, clock_ghz=1.3)
    assert gpu.cycles_to_ns(13) == 10  # exact quotient, no float drift
    assert gpu.cycles_to_ns(64) == 50  # ceil(49.23)
    gpu2 = GpuConfig(sm_count=1, max_ctas_per_sm=1, max_warps_per_sm=1, clock_ghz=1.4)
    assert gpu2.cycles_to_ns(32) == 23  # ceil(22.857)


def test_overheads_defaults_within_observed_range():
    ov = OverheadConfig()
    assert 5000 <= ov.launch_ns <= 20000
    assert 5000 <= ov.sync_ns <= 20000
    with pytest.raises(ValueError):
        OverheadConfig(launch_ns=-1)
