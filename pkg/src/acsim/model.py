"""Core domain types and the on-disk trace format.

A workload trace is a program-ordered stream of kernel launches, each
annotated with the byte ranges it reads and writes. All times are integer
nanoseconds; addresses are abstract 64-bit byte offsets (no allocator is
modeled). Types are immutable after construction and safe to share.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable

U64_MAX = 2**64 - 1

TRACE_FORMAT_VERSION = 1

WHOLE_MEMORY_MARKER = "whole_memory"


class TraceError(ValueError):
    """Raised when a trace file fails to parse or violates the schema."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class MemSegment:
    """Half-open byte interval [start, start + size) in a 64-bit space."""

    start: int
    size: int

    def __post_init__(self):
        if not 0 <= self.start <= U64_MAX:
            raise ValueError(f"segment start {self.start} outside 64-bit space")
        if self.size < 0:
            raise ValueError(f"segment size {self.size} is negative")
        if self.start + self.size > U64_MAX:
            raise ValueError("segment end overflows the 64-bit address space")

    @property
    def end(self) -> int:
        return self.start + self.size


# Conservative fallback: a kernel whose footprint cannot be determined is
# treated as touching all of memory.
WHOLE_MEMORY = MemSegment(0, U64_MAX)

SegmentList = tuple[MemSegment, ...]


def is_whole_memory(segments: SegmentList) -> bool:
    return len(segments) == 1 and segments[0] == WHOLE_MEMORY


@dataclass(frozen=True)
class KernelSpec:
    """One kernel launch: shape, per-CTA duration, and memory footprint."""

    id: int
    name: str
    num_ctas: int
    warps_per_cta: int
    cta_duration_ns: int
    reads: SegmentList = ()
    writes: SegmentList = ()

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("kernel id must be non-negative")
        if self.num_ctas < 1:
            raise ValueError(f"kernel {self.id}: num_ctas must be >= 1")
        if self.warps_per_cta < 1:
            raise ValueError(f"kernel {self.id}: warps_per_cta must be >= 1")
        if self.cta_duration_ns < 1:
            raise ValueError(f"kernel {self.id}: cta_duration_ns must be >= 1")

    @property
    def segment_count(self) -> int:
        return len(self.reads) + len(self.writes)


@dataclass(frozen=True)
class WorkloadTrace:
    """Program-ordered kernel stream; kernel ids are exactly 0..len-1."""

    kernels: tuple[KernelSpec, ...]
    metadata: dict[str, Any] = field(default_factory=dict, compare=True, hash=False)

    def __post_init__(self):
        for pos, k in enumerate(self.kernels):
            if k.id != pos:
                raise ValueError(
                    f"kernel at position {pos} has id {k.id}; ids must be dense program order"
                )

    def __len__(self) -> int:
        return len(self.kernels)

    def __iter__(self):
        return iter(self.kernels)


@dataclass(frozen=True)
class GpuConfig:
    """Machine capacity limits used by the execution engine."""

    sm_count: int
    max_ctas_per_sm: int
    max_warps_per_sm: int
    clock_ghz: float

    def __post_init__(self):
        if self.sm_count < 1 or self.max_ctas_per_sm < 1 or self.max_warps_per_sm < 1:
            raise ValueError("GPU capacity fields must be >= 1")
        if self.clock_ghz <= 0:
            raise ValueError("clock_ghz must be positive")

    @property
    def total_cta_slots(self) -> int:
        return self.sm_count * self.max_ctas_per_sm

    @property
    def total_warp_slots(self) -> int:
        return self.sm_count * self.max_warps_per_sm

    def cycles_to_ns(self, cycles: int) -> int:
        """Convert a cycle count to integer ns, rounding up.

        Uses exact rational arithmetic on the decimal clock value so the
        result never depends on float rounding.
        """
        ghz = Fraction(str(self.clock_ghz))
        return int(math.ceil(Fraction(cycles) / ghz))


# Host dependency-check cost lookup: window size -> [(segment count, ns)].
# Interpolated linearly in segment count, nearest window size, clamped at
# the table edges.
DEFAULT_DEPCHECK_TABLE_NS: dict[int, tuple[tuple[int, int], ...]] = {
    16: ((6, 410), (10, 700)),
    32: ((6, 510), (10, 1640)),
}


@dataclass(frozen=True)
class OverheadConfig:
    """Host and hardware cost model for the scheduling policies."""

    launch_ns: int = 5000
    sync_ns: int = 5000
    depcheck_table_ns: dict[int, tuple[tuple[int, int], ...]] = field(
        default_factory=lambda: dict(DEFAULT_DEPCHECK_TABLE_NS)
    )
    hw_insert_cycles_per_slot: int = 1
    hw_update_cycles_per_slot: int = 1
    dag_build_ns_per_edge_check: float = 2.5
    cpu_dispatch_ns: int = 500

    def __post_init__(self):
        if min(self.launch_ns, self.sync_ns, self.cpu_dispatch_ns) < 0:
            raise ValueError("host costs must be >= 0")
        if self.hw_insert_cycles_per_slot < 0 or self.hw_update_cycles_per_slot < 0:
            raise ValueError("cycle costs must be >= 0")
        if self.dag_build_ns_per_edge_check < 0:
            raise ValueError("dag_build_ns_per_edge_check must be >= 0")
        if not self.depcheck_table_ns:
            raise ValueError("depcheck table must be non-empty")


# Desk-scale default machine: deliberately small so that the bundled
# generators produce kernels large enough to contend for CTA slots.
DESK_GPU = GpuConfig(sm_count=8, max_ctas_per_sm=4, max_warps_per_sm=48, clock_ghz=1.4)

# Presets mirroring the two reference machines used for latency modeling.
LARGE_SIM_GPU = GpuConfig(sm_count=46, max_ctas_per_sm=16, max_warps_per_sm=48, clock_ghz=1.4)
SMALL_HW_GPU = GpuConfig(sm_count=28, max_ctas_per_sm=16, max_warps_per_sm=48, clock_ghz=1.3)


# ---------------------------------------------------------------------------
# Trace serialization: one JSON metadata line, then one JSON object per kernel.


def _segments_to_json(segments: SegmentList) -> Any:
    if is_whole_memory(segments):
        return WHOLE_MEMORY_MARKER
    return [{"start": s.start, "size": s.size} for s in segments]


def _segments_from_json(value: Any, line: int, what: str) -> SegmentList:
    if value == WHOLE_MEMORY_MARKER:
        return (WHOLE_MEMORY,)
    if not isinstance(value, list):
        raise TraceError(f"{what} must be a list or '{WHOLE_MEMORY_MARKER}'", line)
    out = []
    for entry in value:
        if not isinstance(entry, dict) or "start" not in entry or "size" not in entry:
            raise TraceError(f"{what} entries need start and size", line)
        if entry["size"] < 1:
            raise TraceError(f"{what} segment size must be >= 1", line)
        try:
            out.append(MemSegment(int(entry["start"]), int(entry["size"])))
        except ValueError as exc:
            raise TraceError(f"{what}: {exc}", line) from exc
    return tuple(out)


def save_trace(trace: WorkloadTrace, path: str) -> None:
    """Write a trace: metadata line first, then one kernel record per line."""
    meta = {"format_version": TRACE_FORMAT_VERSION}
    meta.update(trace.metadata)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
        for k in trace.kernels:
            record = {
                "id": k.id,
                "name": k.name,
                "num_ctas": k.num_ctas,
                "warps_per_cta": k.warps_per_cta,
                "cta_duration_ns": k.cta_duration_ns,
                "reads": _segments_to_json(k.reads),
                "writes": _segments_to_json(k.writes),
            }
            fh.write(json.dumps(record) + "\n")


def load_trace(path: str) -> WorkloadTrace:
    """Parse a trace file. Unknown record fields are ignored.

    A record that omits its write footprint is treated conservatively as
    writing all of memory; omitted reads default to none.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise TraceError("empty file: missing metadata line", 1)
    try:
        meta = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise TraceError(f"bad metadata: {exc.msg}", 1) from exc
    if not isinstance(meta, dict):
        raise TraceError("metadata line must be a JSON object", 1)
    metadata = {k: v for k, v in meta.items() if k != "format_version"}

    kernels = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TraceError(f"bad kernel record: {exc.msg}", lineno) from exc
        if not isinstance(rec, dict):
            raise TraceError("kernel record must be a JSON object", lineno)
        for req in ("id", "num_ctas", "warps_per_cta", "cta_duration_ns"):
            if req not in rec:
                raise TraceError(f"kernel record missing '{req}'", lineno)
        reads = _segments_from_json(rec["reads"], lineno, "reads") if "reads" in rec else ()
        if "writes" in rec:
            writes = _segments_from_json(rec["writes"], lineno, "writes")
        else:
            writes = (WHOLE_MEMORY,)
        try:
            kernels.append(
                KernelSpec(
                    id=int(rec["id"]),
                    name=str(rec.get("name", f"k{rec['id']}")),
                    num_ctas=int(rec["num_ctas"]),
                    warps_per_cta=int(rec["warps_per_cta"]),
                    cta_duration_ns=int(rec["cta_duration_ns"]),
                    reads=reads,
                    writes=writes,
                )
            )
        except ValueError as exc:
            raise TraceError(str(exc), lineno) from exc

    try:
        return WorkloadTrace(kernels=tuple(kernels), metadata=metadata)
    except ValueError as exc:
        raise TraceError(str(exc)) from exc


def trace_content_hash(trace: WorkloadTrace) -> str:
    """Stable hash of the kernel stream (metadata excluded)."""
    import hashlib

    h = hashlib.sha256()
    for k in trace.kernels:
        h.update(
            json.dumps(
                [k.id, k.name, k.num_ctas, k.warps_per_cta, k.cta_duration_ns,
                 [(s.start, s.size) for s in k.reads],
                 [(s.start, s.size) for s in k.writes]]
            ).encode()
        )
    return h.hexdigest()


def make_trace(kernels: Iterable[KernelSpec], **metadata: Any) -> WorkloadTrace:
    return WorkloadTrace(kernels=tuple(kernels), metadata=dict(metadata))
