"""Synthetic workload generators and the ground-truth dependency oracle.

Each generator first samples a DAG in program order, then assigns memory
segments so that the trace's dependency analysis reproduces that DAG
exactly: every kernel writes its own disjoint address block, and a kernel
reads precisely the blocks of its sampled predecessors. This makes the
sampled DAG an exact oracle for schedule-legality checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .depcheck import DependencyMode, dependency_edges
from .engine import standalone_exec_ns
from .model import GpuConfig, KernelSpec, MemSegment, WorkloadTrace


class WorkloadKind(Enum):
    CHAIN = "chain"
    FORK_JOIN = "fork-join"
    IRREGULAR_DAG = "irregular"
    SIM_ENGINE_LIKE = "sim-engine"
    DYNAMIC_DNN_LIKE = "dynamic-dnn"

    @classmethod
    def parse(cls, text: str) -> "WorkloadKind":
        for kind in cls:
            if kind.value == text.strip().lower():
                return kind
        raise ValueError(f"unknown workload kind {text!r}")


@dataclass(frozen=True)
class GeneratorParams:
    kind: WorkloadKind = WorkloadKind.IRREGULAR_DAG
    n_kernels: int = 100
    cta_median: int = 8
    warps_per_cta: tuple[int, int] = (2, 8)
    cta_duration_ns: tuple[int, int] = (1000, 5000)
    fan_in_max: int = 3
    edge_prob: float = 0.8
    lookback: int = 10
    segment_bytes: int = 4096
    address_space_bytes: int = 1 << 40
    seed: int = 0

    def __post_init__(self):
        if self.n_kernels < 0:
            raise ValueError("n_kernels must be >= 0")
        if self.cta_median < 1:
            raise ValueError("cta_median must be >= 1")
        if self.warps_per_cta[0] < 1 or self.warps_per_cta[0] > self.warps_per_cta[1]:
            raise ValueError("bad warps_per_cta range")
        if self.cta_duration_ns[0] < 1 or self.cta_duration_ns[0] > self.cta_duration_ns[1]:
            raise ValueError("bad cta_duration_ns range")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError("edge_prob must be in [0, 1]")
        if self.fan_in_max < 0 or self.lookback < 1 or self.segment_bytes < 1:
            raise ValueError("bad structural parameters")


# Calibrated desk-scale defaults for the two workload families the
# experiments lean on. Sim-engine traces are long streams of mid-size
# kernels; dynamic-dnn traces are shorter with a per-input random topology.
def sim_engine_params(n_kernels: int = 2000, seed: int = 0) -> GeneratorParams:
    return GeneratorParams(
        kind=WorkloadKind.SIM_ENGINE_LIKE,
        n_kernels=n_kernels,
        cta_median=40,
        warps_per_cta=(2, 8),
        cta_duration_ns=(2000, 10000),
        fan_in_max=3,
        edge_prob=0.9,
        lookback=4,
        seed=seed,
    )


def dynamic_dnn_params(n_kernels: int = 600, seed: int = 0) -> GeneratorParams:
    return GeneratorParams(
        kind=WorkloadKind.DYNAMIC_DNN_LIKE,
        n_kernels=n_kernels,
        cta_median=24,
        warps_per_cta=(2, 8),
        cta_duration_ns=(2000, 8000),
        fan_in_max=3,
        edge_prob=0.8,
        lookback=8,
        seed=seed,
    )


def _geometric_with_median(rng: np.random.Generator, median: int, size: int) -> np.ndarray:
    if median == 1:
        p = 0.6
    else:
        p = 1.0 - 0.5 ** (1.0 / median)
    return rng.geometric(p, size=size)


def _sample_dag(params: GeneratorParams, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """Predecessor tuple per kernel, sampled per the workload kind."""
    n = params.n_kernels
    kind = params.kind
    preds: list[tuple[int, ...]] = []
    if kind is WorkloadKind.CHAIN:
        return [() if j == 0 else (j - 1,) for j in range(n)]
    if kind is WorkloadKind.FORK_JOIN:
        # repeating motif: fork root -> width parallel kernels -> join
        width = max(2, min(4, params.fan_in_max + 1))
        for j in range(n):
            stage = j % (width + 2)
            if j == 0:
                preds.append(())
            elif stage == 0:
                preds.append((j - 1,))  # next fork root depends on previous join
            elif stage <= width:
                preds.append((j - stage,))  # parallel body hangs off the fork root
            else:
                preds.append(tuple(range(j - width, j)))  # join waits on the body
        return preds
    # irregular families: random fan-in from a recent program-order window
    for j in range(n):
        upper = min(j, params.lookback)
        if upper == 0 or rng.random() > params.edge_prob:
            preds.append(())
            continue
        k = int(rng.integers(1, min(params.fan_in_max, upper) + 1))
        chosen = rng.choice(np.arange(j - upper, j), size=k, replace=False)
        preds.append(tuple(sorted(int(c) for c in chosen)))
    return preds


def sampled_dag(params: GeneratorParams) -> list[tuple[int, int]]:
    """The exact DAG `generate(params)` realizes, as an (earlier, later) edge
    list. Uses the same seeded draw sequence as generation."""
    rng = np.random.default_rng(params.seed)
    preds = _sample_dag(params, rng)
    return [(p, j) for j, ps in enumerate(preds) for p in ps]


def generate(params: GeneratorParams) -> WorkloadTrace:
    """Deterministic trace whose dependency edges equal the sampled DAG."""
    n = params.n_kernels
    if n * params.segment_bytes > params.address_space_bytes:
        raise ValueError(
            f"address space exhausted: {n} kernels x {params.segment_bytes} B "
            f"> {params.address_space_bytes} B"
        )
    edge_rng = np.random.default_rng(params.seed)
    if params.kind is WorkloadKind.DYNAMIC_DNN_LIKE:
        # fixed operator shapes, input-dependent topology
        shape_rng = np.random.default_rng(0xD1CE)
    else:
        shape_rng = edge_rng

    preds = _sample_dag(params, edge_rng)
    ctas = _geometric_with_median(shape_rng, params.cta_median, n)
    warps = shape_rng.integers(params.warps_per_cta[0], params.warps_per_cta[1] + 1, size=n)
    durs = shape_rng.integers(
        params.cta_duration_ns[0], params.cta_duration_ns[1] + 1, size=n
    )

    sb = params.segment_bytes
    kernels = []
    for j in range(n):
        write_block = MemSegment(j * sb, sb)
        reads = tuple(MemSegment(p * sb, sb) for p in preds[j])
        kernels.append(
            KernelSpec(
                id=j,
                name=f"{params.kind.value}_{j}",
                num_ctas=int(ctas[j]),
                warps_per_cta=int(warps[j]),
                cta_duration_ns=int(durs[j]),
                reads=reads,
                writes=(write_block,),
            )
        )
    meta = {
        "generator": params.kind.value,
        "seed": params.seed,
        "params": {
            "n_kernels": n,
            "cta_median": params.cta_median,
            "warps_per_cta": list(params.warps_per_cta),
            "cta_duration_ns": list(params.cta_duration_ns),
            "fan_in_max": params.fan_in_max,
            "edge_prob": params.edge_prob,
            "lookback": params.lookback,
            "segment_bytes": sb,
        },
    }
    return WorkloadTrace(kernels=tuple(kernels), metadata=meta)


def true_dependencies(
    trace: WorkloadTrace, mode: DependencyMode = DependencyMode.FULL
) -> list[tuple[int, int]]:
    """Edge list (earlier, later) of every dependent pair in the trace."""
    return dependency_edges(trace.kernels, mode)


def predecessor_map(edges: list[tuple[int, int]], n: int) -> list[list[int]]:
    preds: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        preds[j].append(i)
    return preds


def successor_map(edges: list[tuple[int, int]], n: int) -> list[list[int]]:
    succs: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        succs[i].append(j)
    return succs


def critical_path_ns(
    edges: list[tuple[int, int]], trace: WorkloadTrace, gpu: GpuConfig
) -> int:
    """Longest dependency path, weighting each node by its standalone
    execution time on `gpu`. A lower bound on any legal makespan."""
    for i, j in edges:
        if not 0 <= i < j < len(trace):
            raise ValueError(f"edge ({i}, {j}) violates program order; graph must be acyclic")
    weights = [standalone_exec_ns(k, gpu) for k in trace.kernels]
    best = [0] * len(trace)
    for j in range(len(trace)):
        best[j] = weights[j]
    for i, j in sorted(edges, key=lambda e: e[1]):
        best[j] = max(best[j], best[i] + weights[j])
    return max(best, default=0)


@dataclass
class DagStats:
    n_kernels: int
    n_edges: int
    critical_path_ns: int
    max_level_width: int


def dag_stats(trace: WorkloadTrace, edges: list[tuple[int, int]], gpu: GpuConfig) -> DagStats:
    """Summary statistics; width is the largest longest-path level."""
    n = len(trace)
    level = [0] * n
    for i, j in sorted(edges, key=lambda e: e[1]):
        level[j] = max(level[j], level[i] + 1)
    width = 0
    if n:
        counts: dict[int, int] = {}
        for lv in level:
            counts[lv] = counts.get(lv, 0) + 1
        width = max(counts.values())
    return DagStats(
        n_kernels=n,
        n_edges=len(edges),
        critical_path_ns=critical_path_ns(edges, trace, gpu) if n else 0,
        max_level_width=width,
    )
