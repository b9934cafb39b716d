"""The five scheduling policies under comparison.

serial       : one kernel at a time; the host launches, waits for completion,
               synchronizes, then launches the next.
multi-stream : the dependency DAG is built ahead of time and partitioned into
               a fixed number of in-order streams by greedy critical-path list
               scheduling; cross-stream edges cost a host sync each.
dag-ahead    : the DAG is built ahead of time, then executed on-device with no
               per-kernel host costs.
acs-sw       : a software runtime with an N-slot scheduling window; worker
               threads claim ready kernels, launch through a serialized host
               launch path, and synchronize per completion.
acs-hw       : the scheduling window lives on the device; the host only runs
               dependency checks against a possibly stale mirror of the window
               and streams launch packets, so completions need no host sync.

Every run is checked post-hoc against the trace's true dependency edges;
violations are recorded on the report, never silently dropped.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

from .depcheck import DependencyMode, estimate_depcheck_cost
from .engine import GpuEngine, SimReport, standalone_exec_ns
from .model import GpuConfig, OverheadConfig, WorkloadTrace, trace_content_hash
from .window import SchedulingWindow
from .workloads import predecessor_map, true_dependencies


@dataclass(frozen=True)
class SerialPolicy:
    name: str = field(default="serial", init=False)


@dataclass(frozen=True)
class MultiStreamPolicy:
    streams: int = 4
    name: str = field(default="multi-stream", init=False)

    def __post_init__(self):
        if self.streams < 1:
            raise ValueError("streams must be >= 1")


@dataclass(frozen=True)
class DagAheadPolicy:
    name: str = field(default="dag-ahead", init=False)


@dataclass(frozen=True)
class AcsSwPolicy:
    scheduler_threads: int = 8
    window_n: int = 32
    name: str = field(default="acs-sw", init=False)

    def __post_init__(self):
        if self.scheduler_threads < 1:
            raise ValueError("scheduler_threads must be >= 1")
        if self.window_n < 2:
            raise ValueError("window_n must be >= 2")


@dataclass(frozen=True)
class AcsHwPolicy:
    window_n: int = 32
    scheduled_list_m: int = 64
    name: str = field(default="acs-hw", init=False)

    def __post_init__(self):
        if self.window_n < 2:
            raise ValueError("window_n must be >= 2")
        if self.scheduled_list_m < self.window_n:
            raise ValueError("scheduled_list_m must be >= window_n")


Policy = Union[SerialPolicy, MultiStreamPolicy, DagAheadPolicy, AcsSwPolicy, AcsHwPolicy]


def policy_from_dict(spec: dict) -> Policy:
    kind = spec.get("kind", "")
    params = {k: v for k, v in spec.items() if k != "kind"}
    table = {
        "serial": SerialPolicy,
        "multi-stream": MultiStreamPolicy,
        "dag-ahead": DagAheadPolicy,
        "acs-sw": AcsSwPolicy,
        "acs-hw": AcsHwPolicy,
    }
    if kind not in table:
        raise ValueError(f"unknown policy kind {kind!r}")
    return table[kind](**params)


@dataclass
class PolicyRun:
    policy: Policy
    trace: WorkloadTrace
    gpu: GpuConfig
    overheads: OverheadConfig
    mode: DependencyMode = DependencyMode.FULL
    seed: int = 0
    detailed_events: bool = False


# ---------------------------------------------------------------------------
# shared helpers


@lru_cache(maxsize=128)
def _edges_cached(trace: WorkloadTrace, mode: DependencyMode) -> tuple[tuple[int, int], ...]:
    return tuple(true_dependencies(trace, mode))


def hw_insert_latency_ns(window_n: int, overheads: OverheadConfig, gpu: GpuConfig) -> int:
    """Device-side window insertion: one cycle per slot by default."""
    return gpu.cycles_to_ns(window_n * overheads.hw_insert_cycles_per_slot)


def hw_update_latency_ns(window_n: int, overheads: OverheadConfig, gpu: GpuConfig) -> int:
    """Completion broadcast across the other N-1 slots."""
    return gpu.cycles_to_ns((window_n - 1) * overheads.hw_update_cycles_per_slot)


def pairwise_comparison_count(trace: WorkloadTrace) -> int:
    """Segment comparisons needed to build the full DAG by checking every
    kernel against all of its predecessors."""
    total = 0
    sum_rw = 0
    sum_w = 0
    for k in trace.kernels:
        r, w = len(k.reads), len(k.writes)
        total += w * sum_rw + r * sum_w
        sum_rw += r + w
        sum_w += w
    return total


def dag_construction_ns(trace: WorkloadTrace, overheads: OverheadConfig) -> int:
    comparisons = pairwise_comparison_count(trace)
    return int(round(comparisons * overheads.dag_build_ns_per_edge_check)) + (
        len(trace) * overheads.cpu_dispatch_ns
    )


def closed_form_serial_ns(trace: WorkloadTrace, gpu: GpuConfig, overheads: OverheadConfig) -> int:
    """Serial policy makespan in closed form: launch + run + sync per kernel."""
    return sum(
        overheads.launch_ns + standalone_exec_ns(k, gpu) + overheads.sync_ns
        for k in trace.kernels
    )


def calibrate_dag_build_cost(
    trace: WorkloadTrace,
    gpu: GpuConfig,
    overheads: OverheadConfig,
    target_fraction: float = 0.47,
) -> OverheadConfig:
    """Return overheads with dag_build_ns_per_edge_check set so that DAG
    construction costs `target_fraction` of the serial makespan of `trace`."""
    comparisons = pairwise_comparison_count(trace)
    if comparisons == 0:
        return overheads
    target = target_fraction * closed_form_serial_ns(trace, gpu, overheads)
    per_check = max(0.0, (target - len(trace) * overheads.cpu_dispatch_ns) / comparisons)
    from dataclasses import replace

    return replace(overheads, dag_build_ns_per_edge_check=per_check)


def _segment_count(k) -> int:
    return len(k.reads) + len(k.writes)


def check_legality(
    report: SimReport, edges: tuple[tuple[int, int], ...]
) -> int:
    """Count dependency edges whose downstream kernel dispatched before its
    upstream kernel finished."""
    violations = 0
    times = report.kernel_times
    for i, j in edges:
        if times[j].dispatch_ns < times[i].finish_ns:
            violations += 1
    return violations


def _finalize(report: SimReport, run: PolicyRun, host_busy: int, construction: int = 0) -> SimReport:
    report.policy = run.policy.name
    report.seed = run.seed
    report.host_busy_ns = host_busy
    report.construction_ns = construction
    report.trace_hash = trace_content_hash(run.trace)
    checked = _edges_cached(run.trace, run.mode)
    report.checked_edge_violations = check_legality(report, checked)
    report.legality_ok = report.checked_edge_violations == 0
    if run.mode is DependencyMode.FULL:
        report.full_edge_violations = report.checked_edge_violations
    else:
        full = _edges_cached(run.trace, DependencyMode.FULL)
        report.full_edge_violations = check_legality(report, full)
    report.meta["mode"] = run.mode.value
    report.meta["n_kernels"] = len(run.trace)
    return report


def _empty_report(run: PolicyRun) -> SimReport:
    report = SimReport(makespan_ns=0)
    return _finalize(report, run, host_busy=0)


# ---------------------------------------------------------------------------
# serial


def run_serial(run: PolicyRun) -> SimReport:
    trace, ov = run.trace, run.overheads
    if not len(trace):
        return _empty_report(run)
    engine = GpuEngine(run.gpu, run.detailed_events)
    host_busy = 0

    def launch(idx: int, t: int) -> None:
        nonlocal host_busy
        spec = trace.kernels[idx]
        engine.log("host", kernel_id=spec.id, detail="launch")
        host_busy += ov.launch_ns
        engine.dispatch_kernel(spec, at=t + ov.launch_ns, on_complete=completed)

    def completed(kid: int) -> None:
        nonlocal host_busy
        f = engine.now
        engine.log("host", kernel_id=kid, detail="sync")
        host_busy += ov.sync_ns
        nxt = kid + 1
        if nxt < len(trace):
            engine.schedule(f + ov.sync_ns, lambda: launch(nxt, f + ov.sync_ns))
        else:
            engine.schedule(f + ov.sync_ns, lambda: None)

    engine.schedule(0, lambda: launch(0, 0))
    report = engine.run_until_idle()
    return _finalize(report, run, host_busy)


# ---------------------------------------------------------------------------
# dag-ahead


def run_dag_ahead_of_time(run: PolicyRun) -> SimReport:
    trace, ov = run.trace, run.overheads
    if not len(trace):
        return _empty_report(run)
    construction = dag_construction_ns(trace, ov)
    edges = _edges_cached(trace, DependencyMode.FULL)
    preds = predecessor_map(list(edges), len(trace))
    engine = GpuEngine(run.gpu, run.detailed_events)
    waiting = [len(p) for p in preds]
    succs: list[list[int]] = [[] for _ in range(len(trace))]
    for i, j in edges:
        succs[i].append(j)

    def completed(kid: int) -> None:
        for j in succs[kid]:
            waiting[j] -= 1
            if waiting[j] == 0:
                engine.dispatch_kernel(trace.kernels[j], at=engine.now, on_complete=completed)

    def start() -> None:
        engine.log("host", detail="dag_construction_done")
        for j in range(len(trace)):
            if waiting[j] == 0:
                engine.dispatch_kernel(trace.kernels[j], at=engine.now, on_complete=completed)

    engine.schedule(construction, start)
    report = engine.run_until_idle()
    return _finalize(report, run, host_busy=construction, construction=construction)


# ---------------------------------------------------------------------------
# multi-stream


def partition_streams(
    trace: WorkloadTrace,
    edges: tuple[tuple[int, int], ...],
    streams: int,
    gpu: GpuConfig,
    sync_ns: int,
) -> list[list[int]]:
    """Greedy critical-path list scheduling onto `streams` in-order queues.

    Nodes are taken in decreasing upward-rank order (which is topological)
    and placed on the stream giving the earliest estimated start, counting a
    sync penalty on cross-stream edges.
    """
    n = len(trace)
    weights = [standalone_exec_ns(k, gpu) for k in trace.kernels]
    succs: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        succs[i].append(j)
    rank = [0] * n
    for j in range(n - 1, -1, -1):
        rank[j] = weights[j] + max((rank[s] for s in succs[j]), default=0)
    preds = predecessor_map(list(edges), n)
    order = sorted(range(n), key=lambda k: (-rank[k], k))

    avail = [0] * streams
    finish_est: dict[int, int] = {}
    stream_of: dict[int, int] = {}
    assignment: list[list[int]] = [[] for _ in range(streams)]
    for k in order:
        best_s, best_start = 0, None
        for s in range(streams):
            start = avail[s]
            for p in preds[k]:
                gate = finish_est[p] + (0 if stream_of[p] == s else sync_ns)
                start = max(start, gate)
            if best_start is None or start < best_start:
                best_s, best_start = s, start
        stream_of[k] = best_s
        finish_est[k] = best_start + weights[k]
        avail[best_s] = finish_est[k]
        assignment[best_s].append(k)
    return assignment


def run_multi_stream_static(run: PolicyRun) -> SimReport:
    trace, ov = run.trace, run.overheads
    policy: MultiStreamPolicy = run.policy  # type: ignore[assignment]
    if not len(trace):
        return _empty_report(run)
    construction = dag_construction_ns(trace, ov)
    edges = _edges_cached(trace, DependencyMode.FULL)
    assignment = partition_streams(trace, edges, policy.streams, run.gpu, ov.sync_ns)
    stream_of = {k: s for s, queue in enumerate(assignment) for k in queue}
    preds = predecessor_map(list(edges), len(trace))
    cross = {
        k: sorted(p for p in preds[k] if stream_of[p] != stream_of[k])
        for k in range(len(trace))
    }

    engine = GpuEngine(run.gpu, run.detailed_events)
    host_busy = construction
    launch_free = construction
    finished: set[int] = set()
    finish_waiters: dict[int, list] = {k: [] for k in range(len(trace))}
    # device side: per stream, dispatch strictly in queue order
    prev_done: list[bool] = [True] * policy.streams
    held: list[deque] = [deque() for _ in range(policy.streams)]

    def try_dispatch(s: int) -> None:
        if prev_done[s] and held[s]:
            kid, ready_at = held[s].popleft()
            prev_done[s] = False
            engine.dispatch_kernel(
                trace.kernels[kid], at=max(engine.now, ready_at), on_complete=completed
            )

    def completed(kid: int) -> None:
        finished.add(kid)
        s = stream_of[kid]
        prev_done[s] = True
        try_dispatch(s)
        for cb in finish_waiters[kid]:
            cb()

    def thread_step(s: int, idx: int, t: int) -> None:
        nonlocal host_busy, launch_free
        if idx >= len(assignment[s]):
            return
        kid = assignment[s][idx]
        blockers = [p for p in cross[kid] if p not in finished]
        if blockers:
            # resume when the first unfinished cross-stream upstream retires
            finish_waiters[blockers[0]].append(
                lambda: thread_step(s, idx, max(t, engine.now))
            )
            return
        t = max(t, engine.now)
        for p in cross[kid]:
            engine.log("host", kernel_id=kid, detail=f"sync stream={s} upstream={p}")
            host_busy += ov.sync_ns
            t += ov.sync_ns
        start = max(t, launch_free)
        launch_free = start + ov.launch_ns
        host_busy += ov.launch_ns
        engine.log("host", kernel_id=kid, detail=f"launch stream={s}")

        def enqueue() -> None:
            held[s].append((kid, engine.now))
            try_dispatch(s)
            thread_step(s, idx + 1, engine.now)

        engine.schedule(start + ov.launch_ns, enqueue)

    def start_threads() -> None:
        for s in range(policy.streams):
            thread_step(s, 0, engine.now)

    engine.schedule(construction, start_threads)
    report = engine.run_until_idle()
    return _finalize(report, run, host_busy, construction=construction)


# ---------------------------------------------------------------------------
# acs-sw


def run_acs_sw(run: PolicyRun) -> SimReport:
    trace, ov = run.trace, run.overheads
    policy: AcsSwPolicy = run.policy  # type: ignore[assignment]
    if not len(trace):
        return _empty_report(run)
    preds = predecessor_map(list(_edges_cached(trace, run.mode)), len(trace))

    engine = GpuEngine(run.gpu, run.detailed_events)
    window = SchedulingWindow(policy.window_n)
    fifo = deque(range(len(trace)))
    host_busy = 0
    window_free_at = 0
    launch_free_at = 0
    inserting = False
    idle_threads = list(range(policy.scheduler_threads))
    max_occupancy = 0

    def pump() -> None:
        nonlocal inserting, window_free_at, launch_free_at, host_busy, max_occupancy
        t = engine.now
        if not inserting and fifo and window.free_slots > 0:
            nxt = fifo.popleft()
            cost = estimate_depcheck_cost(
                len(window), _segment_count(trace.kernels[nxt]), ov
            )
            start = max(t, window_free_at)
            window_free_at = start + cost
            host_busy += cost
            inserting = True
            engine.log("host", kernel_id=nxt, detail="depcheck")
            engine.schedule(start + cost, lambda k=nxt: committed(k))
        while idle_threads and window.ready_set():
            kid = window.ready_set()[0]
            window.mark_executing(kid)
            th = idle_threads.pop(0)
            start = max(t, launch_free_at)
            launch_free_at = start + ov.launch_ns
            host_busy += ov.launch_ns
            engine.log("host", kernel_id=kid, detail=f"launch thread={th}")
            engine.schedule(
                start + ov.launch_ns,
                lambda k=kid, w=th: engine.dispatch_kernel(
                    trace.kernels[k], at=engine.now,
                    on_complete=lambda _kid, w=w: finished(_kid, w),
                ),
            )

    def committed(kid: int) -> None:
        nonlocal inserting, max_occupancy
        inserting = False
        window.insert(kid, set(preds[kid]))
        max_occupancy = max(max_occupancy, len(window))
        pump()

    def finished(kid: int, th: int) -> None:
        nonlocal host_busy
        f = engine.now
        host_busy += ov.sync_ns
        engine.log("host", kernel_id=kid, detail=f"sync thread={th}")

        def synced() -> None:
            window.complete(kid)
            idle_threads.append(th)
            idle_threads.sort()
            pump()

        engine.schedule(f + ov.sync_ns, synced)

    engine.schedule(0, pump)
    report = engine.run_until_idle()
    report.meta["max_window_occupancy"] = max_occupancy
    return _finalize(report, run, host_busy)


# ---------------------------------------------------------------------------
# acs-hw


def run_acs_hw(run: PolicyRun) -> SimReport:
    trace, ov = run.trace, run.overheads
    policy: AcsHwPolicy = run.policy  # type: ignore[assignment]
    if not len(trace):
        return _empty_report(run)
    n = len(trace)
    preds = predecessor_map(list(_edges_cached(trace, run.mode)), n)
    insert_ns = hw_insert_latency_ns(policy.window_n, ov, run.gpu)
    update_ns = hw_update_latency_ns(policy.window_n, ov, run.gpu)

    engine = GpuEngine(run.gpu, run.detailed_events)
    window = SchedulingWindow(policy.window_n)
    host_busy = 0
    scheduled_list: deque[int] = deque(maxlen=policy.scheduled_list_m)
    arrival: deque[tuple[int, set[int]]] = deque()  # sent kernels awaiting insertion
    port_free_at = 0
    inserting = False
    max_occupancy = 0
    max_inflight_span = 0

    def cpu_send(idx: int, t: int) -> None:
        nonlocal host_busy
        if idx >= n:
            return
        kid = idx
        cost = estimate_depcheck_cost(
            len(scheduled_list), _segment_count(trace.kernels[kid]), ov
        ) + ov.cpu_dispatch_ns
        host_busy += cost
        engine.log("host", kernel_id=kid, detail="depcheck+dispatch")
        proposed = set(preds[kid]) & set(scheduled_list)
        scheduled_list.append(kid)

        def sent() -> None:
            arrival.append((kid, proposed))
            try_insert()
            cpu_send(idx + 1, engine.now)

        engine.schedule(t + cost, sent)

    def try_insert() -> None:
        nonlocal inserting, port_free_at, max_inflight_span
        if inserting or not arrival or window.free_slots == 0:
            return
        kid, proposed = arrival[0]
        occupants = window.occupant_ids()
        if occupants and kid - occupants[0] > policy.scheduled_list_m:
            return  # stale-mirror guard: wait for the oldest occupant to retire
        if occupants:
            max_inflight_span = max(max_inflight_span, kid - occupants[0])
        arrival.popleft()
        inserting = True
        start = max(engine.now, port_free_at)
        port_free_at = start + insert_ns

        def committed() -> None:
            nonlocal inserting, max_occupancy
            inserting = False
            state = window.insert(kid, proposed)
            max_occupancy = max(max_occupancy, len(window))
            engine.log("window", kernel_id=kid, detail=f"insert state={state.value}")
            if state.value == "ready":
                dispatch_now(kid)
            try_insert()

        engine.schedule(start + insert_ns, committed)

    def dispatch_now(kid: int) -> None:
        window.mark_executing(kid)
        engine.dispatch_kernel(trace.kernels[kid], at=engine.now, on_complete=finished)

    def finished(kid: int) -> None:
        nonlocal port_free_at
        start = max(engine.now, port_free_at)
        port_free_at = start + update_ns

        def updated() -> None:
            released = window.complete(kid)
            engine.log("window", kernel_id=kid, detail=f"retire released={len(released)}")
            for r in released:
                dispatch_now(r)
            try_insert()

        engine.schedule(start + update_ns, updated)

    engine.schedule(0, lambda: cpu_send(0, 0))
    report = engine.run_until_idle()
    report.meta["max_window_occupancy"] = max_occupancy
    report.meta["max_inflight_span"] = max_inflight_span
    report.meta["hw_insert_latency_ns"] = insert_ns
    report.meta["hw_update_latency_ns"] = update_ns
    return _finalize(report, run, host_busy)


# ---------------------------------------------------------------------------


_RUNNERS = {
    SerialPolicy: run_serial,
    MultiStreamPolicy: run_multi_stream_static,
    DagAheadPolicy: run_dag_ahead_of_time,
    AcsSwPolicy: run_acs_sw,
    AcsHwPolicy: run_acs_hw,
}


def run_policy(run: PolicyRun) -> SimReport:
    return _RUNNERS[type(run.policy)](run)
