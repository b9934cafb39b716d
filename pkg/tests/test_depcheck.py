"""Overlap and dependency checks against an independent byte-set oracle."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acsim import _accel
from acsim.depcheck import (
    DependencyMode,
    compute_upstream,
    dependency_edges,
    estimate_depcheck_cost,
    is_dependent,
    segments_overlap,
    upstream_within,
)
from acsim.model import WHOLE_MEMORY, KernelSpec, MemSegment, OverheadConfig


# --- independent oracle: materialize touched bytes and intersect ------------


def _bytes_of(segments):
    touched = set()
    for s in segments:
        touched.update(range(s.start, s.start + s.size))
    return touched


def oracle_dependent(earlier_reads, earlier_writes, later_reads, later_writes, mode):
    eb = _bytes_of(earlier_reads) | _bytes_of(earlier_writes)
    if _bytes_of(later_writes) & eb:
        return True
    if mode is DependencyMode.FULL:
        return bool(_bytes_of(later_reads) & _bytes_of(earlier_writes))
    return False


small_segments = st.builds(
    MemSegment,
    start=st.integers(min_value=0, max_value=2**16 - 256),
    size=st.integers(min_value=1, max_value=256),
)
segment_lists = st.lists(small_segments, max_size=8).map(tuple)


# --- overlap primitive -------------------------------------------------------


def test_overlap_literals():
    assert segments_overlap(MemSegment(0, 64), MemSegment(32, 64))
    assert not segments_overlap(MemSegment(0, 64), MemSegment(64, 64))  # half-open
    assert segments_overlap(MemSegment(100, 4), MemSegment(0, 1000))  # containment


def test_zero_size_never_overlaps():
    z = MemSegment(10, 0)
    assert not segments_overlap(z, MemSegment(0, 100))
    assert not segments_overlap(MemSegment(0, 100), z)
    assert not segments_overlap(z, z)


@given(a=small_segments, b=small_segments)
@settings(max_examples=200)
def test_overlap_symmetric(a, b):
    assert segments_overlap(a, b) == segments_overlap(b, a)


@given(a=small_segments, b=small_segments)
@settings(max_examples=200)
def test_overlap_matches_byte_oracle(a, b):
    assert segments_overlap(a, b) == bool(_bytes_of([a]) & _bytes_of([b]))


# --- is_dependent ------------------------------------------------------------


def test_waw_detected_in_both_modes():
    ew = (MemSegment(0, 128),)
    lw = (MemSegment(64, 64),)
    for mode in DependencyMode:
        assert is_dependent((), ew, (), lw, mode)


def test_raw_gap_between_modes():
    ew = (MemSegment(0, 128),)
    lr = (MemSegment(64, 8),)
    lw = (MemSegment(4096, 8),)
    assert not is_dependent((), ew, lr, lw, DependencyMode.WRITES_ONLY)
    assert is_dependent((), ew, lr, lw, DependencyMode.FULL)


@given(er=segment_lists, ew=segment_lists, lr=segment_lists, lw=segment_lists)
@settings(max_examples=300, deadline=None)
def test_is_dependent_matches_oracle(er, ew, lr, lw):
    for mode in DependencyMode:
        assert is_dependent(er, ew, lr, lw, mode) == oracle_dependent(er, ew, lr, lw, mode)


@given(er=segment_lists, ew=segment_lists, lr=segment_lists, lw=segment_lists)
@settings(max_examples=200, deadline=None)
def test_writes_only_implies_full(er, ew, lr, lw):
    if is_dependent(er, ew, lr, lw, DependencyMode.WRITES_ONLY):
        assert is_dependent(er, ew, lr, lw, DependencyMode.FULL)


# --- compute_upstream --------------------------------------------------------


def _kernel(kid, reads=(), writes=()):
    return KernelSpec(id=kid, name=f"k{kid}", num_ctas=1, warps_per_cta=1,
                      cta_duration_ns=1, reads=reads, writes=writes)


def test_compute_upstream_raw_edge():
    others = [
        (0, (), (MemSegment(0, 100),)),
        (1, (), (MemSegment(200, 100),)),
    ]
    cand = _kernel(5, reads=(MemSegment(50, 10),), writes=(MemSegment(300, 10),))
    assert compute_upstream(cand, others, DependencyMode.FULL) == {0}
    assert compute_upstream(cand, others, DependencyMode.WRITES_ONLY) == set()


def test_compute_upstream_whole_memory_candidate():
    others = [
        (0, (), (MemSegment(0, 100),)),
        (1, (MemSegment(500, 10),), ()),
        (2, (), ()),  # touches nothing
    ]
    cand = _kernel(7, writes=(WHOLE_MEMORY,))
    for mode in DependencyMode:
        assert compute_upstream(cand, others, mode) == {0, 1}


def test_compute_upstream_rejects_later_ids():
    cand = _kernel(3, writes=(MemSegment(0, 8),))
    with pytest.raises(ValueError):
        compute_upstream(cand, [(3, (), (MemSegment(0, 8),))])


def test_upstream_within_matches_compute_upstream():
    rng = np.random.default_rng(5)
    kernels = []
    for kid in range(20):
        reads = tuple(MemSegment(int(rng.integers(0, 4000)), int(rng.integers(1, 128)))
                      for _ in range(rng.integers(0, 4)))
        writes = tuple(MemSegment(int(rng.integers(0, 4000)), int(rng.integers(1, 128)))
                       for _ in range(rng.integers(0, 3)))
        kernels.append(_kernel(kid, reads, writes))
    cand = kernels[15]
    others = [(k.id, k.reads, k.writes) for k in kernels[:15]]
    for mode in DependencyMode:
        expect = compute_upstream(cand, others, mode)
        assert upstream_within(kernels, 15, range(15), mode) == expect


# --- accelerated all-pairs kernel vs plain implementation --------------------


def _random_kernels(rng, n):
    out = []
    for kid in range(n):
        reads = tuple(MemSegment(int(rng.integers(0, 2**16 - 256)), int(rng.integers(1, 256)))
                      for _ in range(rng.integers(0, 5)))
        writes = tuple(MemSegment(int(rng.integers(0, 2**16 - 256)), int(rng.integers(1, 256)))
                       for _ in range(rng.integers(0, 4)))
        out.append(_kernel(kid, reads, writes))
    return out


@pytest.mark.parametrize("mode", list(DependencyMode))
def test_dependency_edges_match_pairwise(mode):
    rng = np.random.default_rng(77)
    kernels = _random_kernels(rng, 40)
    got = set(dependency_edges(kernels, mode))
    expect = {
        (i, j)
        for j in range(len(kernels))
        for i in range(j)
        if is_dependent(kernels[i].reads, kernels[i].writes,
                        kernels[j].reads, kernels[j].writes, mode)
    }
    assert got == expect


@pytest.mark.parametrize("mode_code", [_accel.MODE_WRITES_ONLY, _accel.MODE_FULL])
def test_numpy_backend_matches_selected_backend(mode_code):
    rng = np.random.default_rng(123)
    kernels = _random_kernels(rng, 60)
    table = _accel.pack_segments(kernels)
    src_a, dst_a = _accel.all_dependency_edges(table, mode_code)
    src_b, dst_b = _accel._all_edges_np(table.starts, table.ends, table.r_off,
                                        table.w_off, mode_code)
    assert list(zip(src_a.tolist(), dst_a.tolist())) == list(zip(src_b.tolist(), dst_b.tolist()))


# --- cost table --------------------------------------------------------------


def test_cost_table_exact_points():
    ov = OverheadConfig()
    assert estimate_depcheck_cost(16, 6, ov) == 410
    assert estimate_depcheck_cost(16, 10, ov) == 700
    assert estimate_depcheck_cost(32, 6, ov) == 510
    assert estimate_depcheck_cost(32, 10, ov) == 1640


def test_cost_interpolation_in_segments():
    ov = OverheadConfig()
    # independent recomputation of the linear interpolation
    expected = 510 + (1640 - 510) * (8 - 6) // (10 - 6)
    assert expected == 1075
    assert estimate_depcheck_cost(32, 8, ov) == expected


def test_cost_clamps_at_extremes():
    ov = OverheadConfig()
    assert estimate_depcheck_cost(32, 1, ov) == 510
    assert estimate_depcheck_cost(32, 50, ov) == 1640
    assert estimate_depcheck_cost(0, 2, ov) == 410  # nearest window is 16
    assert estimate_depcheck_cost(1000, 10, ov) == 1640


def test_cost_nearest_window_tie_goes_small():
    ov = OverheadConfig()
    assert estimate_depcheck_cost(24, 6, ov) == 410
