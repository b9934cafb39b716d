"""Command-line entry point: generate | run | validate.

`run` consumes a JSON experiment config mirroring ExperimentConfig; every
(policy x repetition) cell is simulated, compared against the designated
baseline, and emitted as CSV or JSON. Exit status is 0 only when all
legality checks pass. Machine-parsable output goes to stdout (or the
--output file); diagnostics go to stderr.

ACS_SIM_THREADS > 1 runs independent cells in a process pool.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace

from .depcheck import DependencyMode
from .model import (
    DESK_GPU,
    GpuConfig,
    OverheadConfig,
    WorkloadTrace,
    load_trace,
    save_trace,
)
from .policies import Policy, PolicyRun, policy_from_dict, run_policy
from .report import ComparisonReport, compare, emit_to_string
from .workloads import (
    GeneratorParams,
    WorkloadKind,
    dag_stats,
    dynamic_dnn_params,
    generate,
    sim_engine_params,
    true_dependencies,
)


def _eprint(*args) -> None:
    print(*args, file=sys.stderr)


@dataclass
class ExperimentConfig:
    workload: dict
    policies: list[Policy]
    gpu: GpuConfig = DESK_GPU
    overheads: OverheadConfig = field(default_factory=OverheadConfig)
    mode: DependencyMode = DependencyMode.FULL
    baseline: str = ""
    repetitions: int = 1
    seed: int = 0
    output: str = ""
    format: str = "csv"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if "workload" not in raw:
            raise ValueError("config missing 'workload'")
        policies = [policy_from_dict(p) for p in raw.get("policies", [])]
        if not policies:
            raise ValueError("config needs at least one policy")
        gpu = GpuConfig(**raw["gpu"]) if "gpu" in raw else DESK_GPU
        ov_raw = dict(raw.get("overheads", {}))
        if "depcheck_table_ns" in ov_raw:
            ov_raw["depcheck_table_ns"] = {
                int(w): tuple(tuple(p) for p in pts)
                for w, pts in ov_raw["depcheck_table_ns"].items()
            }
        overheads = OverheadConfig(**ov_raw)
        names = [p.name for p in policies]
        baseline = raw.get("baseline") or ("serial" if "serial" in names else names[0])
        if baseline not in names:
            raise ValueError(f"baseline {baseline!r} not among policies {names}")
        return cls(
            workload=raw["workload"],
            policies=policies,
            gpu=gpu,
            overheads=overheads,
            mode=DependencyMode.parse(raw.get("mode", "full")),
            baseline=baseline,
            repetitions=int(raw.get("repetitions", 1)),
            seed=int(raw.get("seed", 0)),
            output=raw.get("output", ""),
            format=raw.get("format", "csv"),
        )


def params_from_dict(raw: dict, seed_override: int | None = None) -> GeneratorParams:
    kind = WorkloadKind.parse(raw.get("kind", "irregular"))
    seed = seed_override if seed_override is not None else int(raw.get("seed", 0))
    n = int(raw.get("n_kernels", raw.get("n", 100)))
    if kind is WorkloadKind.SIM_ENGINE_LIKE:
        base = sim_engine_params(n_kernels=n, seed=seed)
    elif kind is WorkloadKind.DYNAMIC_DNN_LIKE:
        base = dynamic_dnn_params(n_kernels=n, seed=seed)
    else:
        base = GeneratorParams(kind=kind, n_kernels=n, seed=seed)
    overrides = {}
    for key in ("cta_median", "fan_in_max", "edge_prob", "lookback",
                "segment_bytes", "address_space_bytes"):
        if key in raw:
            overrides[key] = type(getattr(base, key))(raw[key])
    for key in ("warps_per_cta", "cta_duration_ns"):
        if key in raw:
            overrides[key] = tuple(raw[key])
    return replace(base, **overrides) if overrides else base


def _resolve_trace(workload: dict, seed: int) -> tuple[WorkloadTrace, str]:
    if "trace" in workload:
        trace = load_trace(workload["trace"])
        label = os.path.basename(workload["trace"])
        return trace, label
    params = params_from_dict(workload, seed_override=seed)
    return generate(params), params.kind.value


def _cell(args: tuple) -> tuple[int, str, object]:
    rep_idx, label, policy, trace, cfg_gpu, cfg_ov, mode, seed = args
    run = PolicyRun(
        policy=policy, trace=trace, gpu=cfg_gpu, overheads=cfg_ov, mode=mode, seed=seed
    )
    return rep_idx, label, run_policy(run)


def _expand_policies(policies: list[Policy], windows: list[int] | None) -> list[tuple[str, Policy]]:
    if not windows:
        return [(p.name, p) for p in policies]
    out: list[tuple[str, Policy]] = []
    for p in policies:
        if hasattr(p, "window_n"):
            for w in windows:
                variant = replace(p, window_n=w)
                if hasattr(variant, "scheduled_list_m") and variant.scheduled_list_m < w:
                    variant = replace(variant, scheduled_list_m=w)
                out.append((f"{p.name}[window={w}]", variant))
        else:
            out.append((p.name, p))
    return out


def cmd_generate(args: argparse.Namespace) -> int:
    raw = {"kind": args.kind, "n_kernels": args.n, "seed": args.seed}
    if args.cta_median is not None:
        raw["cta_median"] = args.cta_median
    try:
        params = params_from_dict(raw)
        trace = generate(params)
    except ValueError as exc:
        _eprint(f"error: {exc}")
        return 1
    save_trace(trace, args.output)
    edges = true_dependencies(trace)
    ctas = sorted(k.num_ctas for k in trace.kernels)
    median = ctas[len(ctas) // 2] if ctas else 0
    print(f"kernels={len(trace)} edges={len(edges)} median_ctas={median} path={args.output}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _eprint(f"error: cannot read config: {exc}")
        return 1
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.mode is not None:
        raw["mode"] = args.mode
    if args.output is not None:
        raw["output"] = args.output
    if args.format is not None:
        raw["format"] = args.format
    try:
        cfg = ExperimentConfig.from_dict(raw)
        windows = [int(w) for w in args.window.split(",")] if args.window else None
        labeled = _expand_policies(cfg.policies, windows)
    except (ValueError, TypeError) as exc:
        _eprint(f"error: bad config: {exc}")
        return 1

    if cfg.repetitions < 1:
        _eprint("error: repetitions must be >= 1")
        return 1
    cells = []
    rep_labels = {}
    for rep in range(cfg.repetitions):
        seed = cfg.seed + rep
        try:
            trace, workload_label = _resolve_trace(cfg.workload, seed)
        except (OSError, ValueError) as exc:
            _eprint(f"error: workload: {exc}")
            return 1
        rep_labels[rep] = workload_label
        for label, policy in labeled:
            cells.append((rep, label, policy, trace, cfg.gpu, cfg.overheads, cfg.mode, seed))

    workers = int(os.environ.get("ACS_SIM_THREADS", "1") or "1")
    if workers > 1 and len(cells) > 1:
        import concurrent.futures as cf

        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_cell, cells))
    else:
        outcomes = [_cell(c) for c in cells]

    reports: list[ComparisonReport] = []
    for rep in range(cfg.repetitions):
        rows = [(label, report) for r, label, report in outcomes if r == rep]
        baseline_label = next(
            (label for label, _ in rows if label.split("[")[0] == cfg.baseline), cfg.baseline
        )
        reports.append(
            compare(rows, baseline_label, cfg.gpu,
                    workload=rep_labels[rep], seed=cfg.seed + rep)
        )

    extra = {"mode": cfg.mode.value}
    text = emit_to_string(reports, cfg.format, extra)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        _eprint(f"wrote {cfg.output}")
    else:
        sys.stdout.write(text)

    invalid = [rep for rep in reports if not rep.valid]
    if invalid:
        _eprint(f"legality failure in {len(invalid)} repetition(s)")
        return 2
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        trace = load_trace(args.trace)
    except (OSError, ValueError) as exc:
        _eprint(f"error: {exc}")
        return 1
    full = true_dependencies(trace, DependencyMode.FULL)
    writes_only = true_dependencies(trace, DependencyMode.WRITES_ONLY)
    stats = dag_stats(trace, full, DESK_GPU)
    diff = len(set(full) - set(writes_only))
    print(
        f"kernels={stats.n_kernels} edges={stats.n_edges} "
        f"critical_path_ns={stats.critical_path_ns} max_width={stats.max_level_width} "
        f"mode_edge_diff={diff}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acsim",
        description="Trace-driven simulator for out-of-order GPU kernel scheduling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a synthetic workload trace")
    gen.add_argument("--kind", default="irregular",
                     choices=[k.value for k in WorkloadKind])
    gen.add_argument("--n", type=int, default=100, help="number of kernels")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--cta-median", type=int, default=None, dest="cta_median")
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(func=cmd_generate)

    runp = sub.add_parser("run", help="run an experiment config")
    runp.add_argument("config", help="JSON experiment config path")
    runp.add_argument("--seed", type=int, default=None, help="override base seed")
    runp.add_argument("--mode", choices=["paper", "full"], default=None,
                      help="dependency mode: paper = writes-only checks, full adds RAW")
    runp.add_argument("--output", default=None)
    runp.add_argument("--format", choices=["csv", "json"], default=None)
    runp.add_argument("--window", default=None,
                      help="comma-separated window sizes to sweep, e.g. 16,32")
    runp.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="print DAG statistics for a trace")
    val.add_argument("trace")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
