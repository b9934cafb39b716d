"""Hot numeric kernels for segment-overlap dependency analysis.

Two interchangeable backends: numba-jitted tight loops (default) and a
vectorized numpy fallback. Set ACS_SIM_NO_NUMBA=1 to force the fallback;
it is also used automatically when numba is unavailable. Both backends
consume the same packed representation: all segments of a trace laid out
in flat uint64 start/end arrays with per-kernel [reads | writes] slices
described by four offset arrays.

Traces index kernels 0..n-1; dependency modes are passed as integers
(0 = write-vs-earlier-read/write only, 1 = additionally read-vs-earlier-write).
"""

from __future__ import annotations

import os

import numpy as np

MODE_WRITES_ONLY = 0
MODE_FULL = 1

_env_disable = os.environ.get("ACS_SIM_NO_NUMBA", "").strip() not in ("", "0", "false")

try:  # pragma: no cover - exercised implicitly by backend selection
    if _env_disable:
        raise ImportError("numba disabled via ACS_SIM_NO_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


class SegmentTable:
    """Packed footprint of a kernel sequence.

    starts/ends hold every segment; kernel k's reads occupy
    [r_off[k], r_off[k+1]) and its writes [w_off[k], w_off[k+1]).
    """

    __slots__ = ("starts", "ends", "r_off", "w_off", "n")

    def __init__(self, starts, ends, r_off, w_off):
        self.starts = starts
        self.ends = ends
        self.r_off = r_off
        self.w_off = w_off
        self.n = len(r_off) - 1


def pack_segments(kernels) -> SegmentTable:
    """Flatten (reads, writes) of each kernel into a SegmentTable."""
    starts: list[int] = []
    ends: list[int] = []
    r_off = np.zeros(len(kernels) + 1, dtype=np.int64)
    w_off = np.zeros(len(kernels) + 1, dtype=np.int64)
    for i, k in enumerate(kernels):
        r_off[i] = len(starts)
        for s in k.reads:
            starts.append(s.start)
            ends.append(s.start + s.size)
        w_off[i] = len(starts)
        for s in k.writes:
            starts.append(s.start)
            ends.append(s.start + s.size)
    r_off[len(kernels)] = len(starts)
    # sentinel: reads of kernel i end where writes begin, writes end at r_off[i+1]
    return SegmentTable(
        np.array(starts, dtype=np.uint64),
        np.array(ends, dtype=np.uint64),
        r_off,
        w_off,
    )


@njit(cache=True)
def _pair_dependent_jit(starts, ends, r0, w0, e0, r1, w1, e1, mode):
    # later kernel 1 against earlier kernel 0: writes1 vs reads0+writes0,
    # plus reads1 vs writes0 in full mode. Empty (zero-size) segments never hit.
    for j in range(w1, e1):
        s1 = starts[j]
        e1j = ends[j]
        if s1 == e1j:
            continue
        for i in range(r0, e0):
            if s1 < ends[i] and e1j > starts[i] and starts[i] != ends[i]:
                return True
    if mode == MODE_FULL:
        for j in range(r1, w1):
            s1 = starts[j]
            e1j = ends[j]
            if s1 == e1j:
                continue
            for i in range(w0, e0):
                if s1 < ends[i] and e1j > starts[i] and starts[i] != ends[i]:
                    return True
    return False


@njit(cache=True)
def _all_edges_jit(starts, ends, r_off, w_off, mode):
    n = len(r_off) - 1
    count = 0
    for j in range(n):
        for i in range(j):
            if _pair_dependent_jit(
                starts, ends,
                r_off[i], w_off[i], r_off[i + 1],
                r_off[j], w_off[j], r_off[j + 1],
                mode,
            ):
                count += 1
    src = np.empty(count, dtype=np.int64)
    dst = np.empty(count, dtype=np.int64)
    pos = 0
    for j in range(n):
        for i in range(j):
            if _pair_dependent_jit(
                starts, ends,
                r_off[i], w_off[i], r_off[i + 1],
                r_off[j], w_off[j], r_off[j + 1],
                mode,
            ):
                src[pos] = i
                dst[pos] = j
                pos += 1
    return src, dst


@njit(cache=True)
def _upstream_mask_jit(starts, ends, r_off, w_off, candidate, others, mode):
    mask = np.zeros(len(others), dtype=np.bool_)
    for idx in range(len(others)):
        i = others[idx]
        mask[idx] = _pair_dependent_jit(
            starts, ends,
            r_off[i], w_off[i], r_off[i + 1],
            r_off[candidate], w_off[candidate], r_off[candidate + 1],
            mode,
        )
    return mask


def _slice_overlaps_np(starts, ends, a0, a1, b0, b1) -> bool:
    if a0 == a1 or b0 == b1:
        return False
    s_a = starts[a0:a1, None]
    e_a = ends[a0:a1, None]
    s_b = starts[None, b0:b1]
    e_b = ends[None, b0:b1]
    hit = (s_a < e_b) & (e_a > s_b) & (s_a != e_a) & (s_b != e_b)
    return bool(hit.any())


def _pair_dependent_np(table: SegmentTable, i: int, j: int, mode: int) -> bool:
    r_off, w_off = table.r_off, table.w_off
    if _slice_overlaps_np(table.starts, table.ends, w_off[j], r_off[j + 1], r_off[i], r_off[i + 1]):
        return True
    if mode == MODE_FULL:
        return _slice_overlaps_np(
            table.starts, table.ends, r_off[j], w_off[j], w_off[i], r_off[i + 1]
        )
    return False


def _all_edges_np(starts, ends, r_off, w_off, mode):
    """Fallback: for each later kernel, broadcast its few segments against
    every earlier segment at once and reduce per owning kernel."""
    n = len(r_off) - 1
    nonempty = (starts != ends)
    # owner[i] = kernel owning segment slot i; write flag per slot
    owner = np.searchsorted(r_off[1:], np.arange(len(starts)), side="right")
    is_write = np.zeros(len(starts), dtype=bool)
    for k in range(n):
        is_write[w_off[k]:r_off[k + 1]] = True
    src_list: list[np.ndarray] = []
    dst_list: list[int] = []
    for j in range(n):
        lo = r_off[j]
        if lo == 0:
            continue
        prior_starts = starts[:lo]
        prior_ends = ends[:lo]
        prior_ok = nonempty[:lo]
        hit = np.zeros(lo, dtype=bool)
        wjs = starts[w_off[j]:r_off[j + 1]]
        wje = ends[w_off[j]:r_off[j + 1]]
        for s, e in zip(wjs, wje):
            if s == e:
                continue
            hit |= (s < prior_ends) & (e > prior_starts) & prior_ok
        if mode == MODE_FULL:
            rjs = starts[r_off[j]:w_off[j]]
            rje = ends[r_off[j]:w_off[j]]
            prior_w = prior_ok & is_write[:lo]
            for s, e in zip(rjs, rje):
                if s == e:
                    continue
                hit |= (s < prior_ends) & (e > prior_starts) & prior_w
        if hit.any():
            preds = np.unique(owner[:lo][hit])
            src_list.append(preds)
            dst_list.extend([j] * len(preds))
    if not src_list:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    src = np.concatenate(src_list).astype(np.int64)
    dst = np.array(dst_list, dtype=np.int64)
    return src, dst


def _upstream_mask_np(starts, ends, r_off, w_off, candidate, others, mode):
    table = SegmentTable(starts, ends, r_off, w_off)
    return np.array(
        [_pair_dependent_np(table, int(i), candidate, mode) for i in others],
        dtype=bool,
    )


USING_NUMBA = HAS_NUMBA

if USING_NUMBA:
    _all_edges = _all_edges_jit
    _upstream_mask = _upstream_mask_jit
else:
    _all_edges = _all_edges_np
    _upstream_mask = _upstream_mask_np


def all_dependency_edges(table: SegmentTable, mode: int):
    """All (earlier, later) dependent pairs, ordered by later then earlier id."""
    src, dst = _all_edges(table.starts, table.ends, table.r_off, table.w_off, mode)
    return src, dst


def upstream_mask(table: SegmentTable, candidate: int, others, mode: int):
    """Boolean mask over `others`: which earlier kernels the candidate depends on."""
    others_arr = np.asarray(others, dtype=np.int64)
    if len(others_arr) == 0:
        return np.zeros(0, dtype=bool)
    return _upstream_mask(
        table.starts, table.ends, table.r_off, table.w_off,
        int(candidate), others_arr, mode,
    )
