"""Cross-policy comparison and plot-ready CSV/JSON emission."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any

from .engine import SimReport, achieved_occupancy
from .model import GpuConfig


CSV_COLUMNS = [
    "workload",
    "seed",
    "policy",
    "makespan_ns",
    "occupancy",
    "speedup",
    "construction_ns",
    "host_busy_ns",
    "legality_ok",
]


class ReportError(ValueError):
    pass


@dataclass
class PolicyResult:
    policy: str
    makespan_ns: int
    occupancy: float
    speedup: float
    construction_ns: int
    host_busy_ns: int
    legality_ok: bool
    full_edge_violations: int = 0


@dataclass
class ComparisonReport:
    workload: str
    seed: int
    baseline: str
    results: list[PolicyResult]
    valid: bool
    meta: dict[str, Any] = field(default_factory=dict)


def compare(
    runs: list[tuple[str, SimReport]],
    baseline: str,
    gpu: GpuConfig,
    workload: str = "",
    seed: int = 0,
) -> ComparisonReport:
    """Normalize every run's makespan to the named baseline's.

    All runs must come from the same trace; a report is only valid when
    every run passed its legality check.
    """
    by_name = {name: rep for name, rep in runs}
    if baseline not in by_name:
        raise ReportError(f"baseline {baseline!r} not among runs {sorted(by_name)}")
    hashes = {rep.trace_hash for _, rep in runs}
    if len(hashes) > 1:
        raise ReportError("runs compare different traces (trace hash mismatch)")
    base = by_name[baseline].makespan_ns
    results = []
    for name, rep in runs:
        if rep.makespan_ns > 0:
            occ = achieved_occupancy(rep, gpu)
            speedup = base / rep.makespan_ns
        else:
            occ = 0.0
            speedup = 1.0 if base == 0 else float("inf")
        results.append(
            PolicyResult(
                policy=name,
                makespan_ns=rep.makespan_ns,
                occupancy=occ,
                speedup=speedup,
                construction_ns=rep.construction_ns,
                host_busy_ns=rep.host_busy_ns,
                legality_ok=rep.legality_ok,
                full_edge_violations=rep.full_edge_violations,
            )
        )
    valid = all(r.legality_ok for r in results)
    return ComparisonReport(
        workload=workload,
        seed=seed,
        baseline=baseline,
        results=results,
        valid=valid,
        meta={"trace_hash": next(iter(hashes)) if hashes else ""},
    )


def report_rows(report: ComparisonReport, extra: dict[str, Any] | None = None) -> list[dict]:
    rows = []
    for r in report.results:
        row = {
            "workload": report.workload,
            "seed": report.seed,
            "policy": r.policy,
            "makespan_ns": r.makespan_ns,
            "occupancy": f"{r.occupancy:.6f}",
            "speedup": f"{r.speedup:.6f}",
            "construction_ns": r.construction_ns,
            "host_busy_ns": r.host_busy_ns,
            "legality_ok": r.legality_ok,
        }
        if extra:
            row.update(extra)
        rows.append(row)
    return rows


def emit_to_string(
    reports: list[ComparisonReport], fmt: str, extra: dict[str, Any] | None = None
) -> str:
    """Render reports as CSV (one data row per policy) or JSON.

    Output is byte-stable: fixed column order, sorted keys, no timestamps.
    """
    if fmt == "csv":
        columns = list(CSV_COLUMNS)
        if extra:
            columns += sorted(k for k in extra if k not in columns)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for rep in reports:
            for row in report_rows(rep, extra):
                writer.writerow(row)
        return buf.getvalue()
    if fmt == "json":
        payload: dict[str, Any] = {
            "reports": [
                {
                    "workload": rep.workload,
                    "seed": rep.seed,
                    "baseline": rep.baseline,
                    "valid": rep.valid,
                    "meta": rep.meta,
                    "results": [
                        {
                            "policy": r.policy,
                            "makespan_ns": r.makespan_ns,
                            "occupancy": round(r.occupancy, 6),
                            "speedup": round(r.speedup, 6),
                            "construction_ns": r.construction_ns,
                            "host_busy_ns": r.host_busy_ns,
                            "legality_ok": r.legality_ok,
                            "full_edge_violations": r.full_edge_violations,
                        }
                        for r in rep.results
                    ],
                }
                for rep in reports
            ],
        }
        if extra:
            payload["config"] = extra
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    raise ReportError(f"unknown format {fmt!r}")


def emit(reports: list[ComparisonReport], fmt: str, path: str, extra: dict[str, Any] | None = None) -> None:
    text = emit_to_string(reports, fmt, extra)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
