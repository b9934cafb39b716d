"""Memory-interval overlap checks and inter-kernel dependency determination.

Two modes are supported. WRITES_ONLY compares only the later kernel's write
segments against the earlier kernel's reads and writes (catching WAW and
WAR hazards). FULL additionally compares the later kernel's reads against
the earlier kernel's writes (RAW), which is what schedule legality is
defined over; it detects a strict superset of WRITES_ONLY edges and is the
default everywhere.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import _accel
from .model import KernelSpec, MemSegment, OverheadConfig, SegmentList


class DependencyMode(Enum):
    WRITES_ONLY = "writes-only"
    FULL = "full"

    @classmethod
    def parse(cls, text: str) -> "DependencyMode":
        key = text.strip().lower()
        # "paper" is the CLI alias for the writes-only comparison
        if key in ("writes-only", "writes_only", "paper"):
            return cls.WRITES_ONLY
        if key == "full":
            return cls.FULL
        raise ValueError(f"unknown dependency mode {text!r}")

    @property
    def accel_code(self) -> int:
        return _accel.MODE_FULL if self is DependencyMode.FULL else _accel.MODE_WRITES_ONLY


def segments_overlap(a: MemSegment, b: MemSegment) -> bool:
    """True iff the half-open intervals intersect; zero-size never overlaps."""
    return a.start < b.end and a.end > b.start and a.size > 0 and b.size > 0


def _any_overlap(xs: SegmentList, ys: SegmentList) -> bool:
    return any(segments_overlap(x, y) for x in xs for y in ys)


def is_dependent(
    earlier_reads: SegmentList,
    earlier_writes: SegmentList,
    later_reads: SegmentList,
    later_writes: SegmentList,
    mode: DependencyMode = DependencyMode.FULL,
) -> bool:
    """Whether the later kernel must wait for the earlier one."""
    if _any_overlap(later_writes, earlier_reads) or _any_overlap(later_writes, earlier_writes):
        return True
    if mode is DependencyMode.FULL:
        return _any_overlap(later_reads, earlier_writes)
    return False


def compute_upstream(
    candidate: KernelSpec,
    others: list[tuple[int, SegmentList, SegmentList]],
    mode: DependencyMode = DependencyMode.FULL,
) -> set[int]:
    """Ids among `others` (all earlier in program order) the candidate depends on."""
    result = set()
    for kid, reads, writes in others:
        if kid >= candidate.id:
            raise ValueError(
                f"kernel {kid} is not earlier than candidate {candidate.id}"
            )
        if is_dependent(reads, writes, candidate.reads, candidate.writes, mode):
            result.add(kid)
    return result


def estimate_depcheck_cost(
    window_occupancy: int,
    total_segments: int,
    overheads: OverheadConfig,
) -> int:
    """Host-side dependency-check cost in ns.

    Looks up the calibration table: nearest tabulated window size (ties go
    to the smaller), linear interpolation over the segment count, clamped
    at the table extremes.
    """
    table = overheads.depcheck_table_ns
    window = min(sorted(table), key=lambda w: (abs(w - window_occupancy), w))
    points = sorted(table[window])
    segs = np.array([p[0] for p in points], dtype=np.float64)
    costs = np.array([p[1] for p in points], dtype=np.float64)
    return int(round(float(np.interp(total_segments, segs, costs))))


def dependency_edges(kernels, mode: DependencyMode = DependencyMode.FULL) -> list[tuple[int, int]]:
    """All (earlier, later) dependent pairs of a kernel sequence.

    Backed by the accelerated all-pairs kernel; see `acsim._accel` for the
    backend selection (numba by default, numpy fallback via ACS_SIM_NO_NUMBA).
    """
    table = _accel.pack_segments(list(kernels))
    src, dst = _accel.all_dependency_edges(table, mode.accel_code)
    return list(zip(src.tolist(), dst.tolist()))


def upstream_within(
    kernels, candidate_id: int, other_ids, mode: DependencyMode = DependencyMode.FULL
) -> set[int]:
    """compute_upstream over kernels of one trace, via the accelerated backend."""
    others = sorted(other_ids)
    if not others:
        return set()
    table = _accel.pack_segments(list(kernels))
    mask = _accel.upstream_mask(table, candidate_id, np.array(others), mode.accel_code)
    return {kid for kid, hit in zip(others, mask) if hit}
