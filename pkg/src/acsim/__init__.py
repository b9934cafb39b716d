"""acsim: trace-driven simulation of out-of-order GPU kernel scheduling.

Kernels annotated with read/write address segments flow through scheduling
policies ranging from fully serial execution to a hardware-resident
scheduling window; a deterministic discrete-event engine models CTA-level
execution and reports makespans and achieved occupancy.
"""

from .depcheck import (
    DependencyMode,
    compute_upstream,
    estimate_depcheck_cost,
    is_dependent,
    segments_overlap,
)
from .engine import GpuEngine, SimReport, achieved_occupancy, standalone_exec_ns
from .model import (
    DESK_GPU,
    WHOLE_MEMORY,
    GpuConfig,
    KernelSpec,
    MemSegment,
    OverheadConfig,
    WorkloadTrace,
    load_trace,
    save_trace,
    trace_content_hash,
)
from .policies import (
    AcsHwPolicy,
    AcsSwPolicy,
    DagAheadPolicy,
    MultiStreamPolicy,
    PolicyRun,
    SerialPolicy,
    run_policy,
)
from .report import ComparisonReport, compare, emit
from .window import KernelState, SchedulingWindow
from .workloads import GeneratorParams, WorkloadKind, critical_path_ns, generate, true_dependencies

__version__ = "0.1.0"

__all__ = [
    "AcsHwPolicy",
    "AcsSwPolicy",
    "ComparisonReport",
    "DESK_GPU",
    "DagAheadPolicy",
    "DependencyMode",
    "GeneratorParams",
    "GpuConfig",
    "GpuEngine",
    "KernelSpec",
    "KernelState",
    "MemSegment",
    "MultiStreamPolicy",
    "OverheadConfig",
    "PolicyRun",
    "SchedulingWindow",
    "SerialPolicy",
    "SimReport",
    "WHOLE_MEMORY",
    "WorkloadKind",
    "WorkloadTrace",
    "achieved_occupancy",
    "compare",
    "compute_upstream",
    "critical_path_ns",
    "emit",
    "estimate_depcheck_cost",
    "generate",
    "is_dependent",
    "load_trace",
    "run_policy",
    "save_trace",
    "segments_overlap",
    "standalone_exec_ns",
    "trace_content_hash",
    "true_dependencies",
]
