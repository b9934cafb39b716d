"""Deterministic discrete-event engine for CTA-level kernel execution.

Each CTA occupies one CTA slot and `warps_per_cta` warp slots on a single
SM for exactly `cta_duration_ns`. CTAs issue greedily: resident kernels
are served oldest-dispatch-first with backfill, onto the lowest-index SM
with room. Event ties break by insertion sequence number, so a run is a
pure function of its inputs.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

from .model import GpuConfig, KernelSpec


class EngineError(Exception):
    pass


class CapacityError(EngineError):
    """A kernel's CTA shape cannot fit on any SM of the configured GPU."""


class DuplicateDispatchError(EngineError):
    pass


@dataclass(frozen=True)
class EventRecord:
    t_ns: int
    kind: str
    kernel_id: int | None = None
    sm_id: int | None = None
    detail: str = ""


@dataclass
class KernelTiming:
    dispatch_ns: int
    finish_ns: int = -1


@dataclass
class SimReport:
    """Outcome of one policy run."""

    makespan_ns: int = 0
    kernel_times: dict[int, KernelTiming] = field(default_factory=dict)
    active_warp_integral: int = 0
    host_busy_ns: int = 0
    events: list[EventRecord] = field(default_factory=list)
    construction_ns: int = 0
    legality_ok: bool = True
    checked_edge_violations: int = 0
    full_edge_violations: int = 0
    policy: str = ""
    seed: int = 0
    trace_hash: str = ""
    meta: dict[str, Any] = field(default_factory=dict)


def per_sm_cta_limit(spec: KernelSpec, gpu: GpuConfig) -> int:
    """How many CTAs of this kernel one SM can host at once."""
    return min(gpu.max_ctas_per_sm, gpu.max_warps_per_sm // spec.warps_per_cta)


def standalone_exec_ns(spec: KernelSpec, gpu: GpuConfig) -> int:
    """Execution time of the kernel alone on an idle GPU (wave formula)."""
    per_sm = per_sm_cta_limit(spec, gpu)
    if per_sm < 1:
        raise CapacityError(
            f"kernel {spec.id}: {spec.warps_per_cta} warps/CTA exceeds "
            f"max_warps_per_sm={gpu.max_warps_per_sm}"
        )
    waves = math.ceil(spec.num_ctas / (per_sm * gpu.sm_count))
    return waves * spec.cta_duration_ns


class _Resident:
    __slots__ = ("spec", "remaining", "in_flight")

    def __init__(self, spec: KernelSpec):
        self.spec = spec
        self.remaining = spec.num_ctas
        self.in_flight = 0


class GpuEngine:
    """Single GPU instance plus an event calendar shared with host callbacks."""

    def __init__(self, gpu: GpuConfig, detailed_events: bool = False):
        self.gpu = gpu
        self.detailed_events = detailed_events
        self.now = 0
        self._heap: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = 0
        self._free_ctas = [gpu.max_ctas_per_sm] * gpu.sm_count
        self._free_warps = [gpu.max_warps_per_sm] * gpu.sm_count
        self._total_free_ctas = gpu.sm_count * gpu.max_ctas_per_sm
        self._resident: list[_Resident] = []
        self._issuable: list[_Resident] = []  # residents with CTAs left, oldest first
        self._active_warps = 0
        self._warp_integral = 0
        self._last_t = 0
        self._timings: dict[int, KernelTiming] = {}
        self._on_complete: dict[int, Callable[[int], None] | None] = {}
        self._events: list[EventRecord] = []

    # -- calendar ----------------------------------------------------------

    def schedule(self, t: int, fn: Callable[[], None]) -> None:
        if t < self.now:
            raise EngineError(f"cannot schedule at {t} before now={self.now}")
        heapq.heappush(self._heap, (t, self._seq, fn))
        self._seq += 1

    def log(self, kind: str, kernel_id: int | None = None,
            sm_id: int | None = None, detail: str = "") -> None:
        self._events.append(EventRecord(self.now, kind, kernel_id, sm_id, detail))

    # -- kernel lifecycle ----------------------------------------------------

    def dispatch_kernel(
        self,
        spec: KernelSpec,
        at: int,
        on_complete: Callable[[int], None] | None = None,
    ) -> None:
        """Make the kernel resident at time `at`; CTAs then issue greedily."""
        if at < self.now:
            raise EngineError(f"dispatch at {at} before now={self.now}")
        if spec.id in self._timings:
            raise DuplicateDispatchError(f"kernel {spec.id} already dispatched")
        if per_sm_cta_limit(spec, self.gpu) < 1:
            raise CapacityError(
                f"kernel {spec.id}: {spec.warps_per_cta} warps/CTA exceeds "
                f"max_warps_per_sm={self.gpu.max_warps_per_sm}"
            )
        self._timings[spec.id] = KernelTiming(dispatch_ns=at)
        self._on_complete[spec.id] = on_complete

        def arrive():
            res = _Resident(spec)
            self._resident.append(res)
            self._issuable.append(res)
            self.log("dispatch", kernel_id=spec.id)
            self._issue()

        self.schedule(at, arrive)

    def _issue(self) -> None:
        # Oldest resident first; if its CTAs do not fit, younger kernels may
        # still backfill remaining capacity.
        if self._total_free_ctas == 0 or not self._issuable:
            return
        drained: list[_Resident] = []
        for res in self._issuable:
            if self._total_free_ctas == 0:
                break
            w = res.spec.warps_per_cta
            for sm in range(self.gpu.sm_count):
                if res.remaining == 0:
                    break
                fit = min(
                    res.remaining,
                    self._free_ctas[sm],
                    self._free_warps[sm] // w,
                )
                if fit <= 0:
                    continue
                self._free_ctas[sm] -= fit
                self._free_warps[sm] -= fit * w
                self._total_free_ctas -= fit
                res.remaining -= fit
                res.in_flight += fit
                self._active_warps += fit * w
                if self.detailed_events:
                    self.log("cta_issue", kernel_id=res.spec.id, sm_id=sm,
                             detail=f"count={fit}")
                self.schedule(
                    self.now + res.spec.cta_duration_ns,
                    self._make_retire(res, sm, fit),
                )
            if res.remaining == 0:
                drained.append(res)
        for res in drained:
            self._issuable.remove(res)

    def _make_retire(self, res: _Resident, sm: int, count: int) -> Callable[[], None]:
        def retire():
            w = res.spec.warps_per_cta
            self._free_ctas[sm] += count
            self._free_warps[sm] += count * w
            self._total_free_ctas += count
            self._active_warps -= count * w
            res.in_flight -= count
            if self.detailed_events:
                self.log("cta_retire", kernel_id=res.spec.id, sm_id=sm,
                         detail=f"count={count}")
            if res.remaining == 0 and res.in_flight == 0:
                kid = res.spec.id
                self._resident.remove(res)
                self._timings[kid].finish_ns = self.now
                self.log("finish", kernel_id=kid)
                cb = self._on_complete.get(kid)
                if cb is not None:
                    self.schedule(self.now, lambda: cb(kid))
            self._issue()

        return retire

    # -- run loop ------------------------------------------------------------

    def run_until_idle(self) -> SimReport:
        """Process every event; returns the base report (host fields unset)."""
        while self._heap:
            t, _, fn = heapq.heappop(self._heap)
            if t > self.now:
                self._warp_integral += self._active_warps * (t - self._last_t)
                self._last_t = t
                self.now = t
            fn()
        unfinished = [k for k, tm in self._timings.items() if tm.finish_ns < 0]
        if unfinished:
            raise EngineError(f"kernels never finished: {sorted(unfinished)}")
        return SimReport(
            makespan_ns=self.now,
            kernel_times=self._timings,
            active_warp_integral=self._warp_integral,
            events=self._events,
        )


def achieved_occupancy(report: SimReport, gpu: GpuConfig) -> float:
    """Time-averaged active warps over the GPU's warp capacity, in [0, 1].

    The denominator spans the full makespan, so host-only idle intervals
    (launch gaps, trailing syncs) count against occupancy.
    """
    if report.makespan_ns <= 0:
        raise ValueError("occupancy undefined for zero-makespan report")
    return report.active_warp_integral / (
        report.makespan_ns * gpu.sm_count * gpu.max_warps_per_sm
    )


def export_event_log(report: SimReport, path: str) -> None:
    """Write the event log as line-delimited JSON records."""
    with open(path, "w", encoding="utf-8") as fh:
        for ev in report.events:
            rec = {"t_ns": ev.t_ns, "event_kind": ev.kind}
            if ev.kernel_id is not None:
                rec["kernel_id"] = ev.kernel_id
            if ev.sm_id is not None:
                rec["sm_id"] = ev.sm_id
            if ev.detail:
                rec["detail"] = ev.detail
            fh.write(json.dumps(rec) + "\n")
