"""Best-first search over (col, row, heading-bin) states with the lookup
table as the move set, plus the region-weighted variant that scales both the
step cost and the heuristic by w inside a predicted path region.

The inner loop is JIT-compiled; the Python layer validates inputs, prepares
flat tables and wraps results.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from numba import njit, objmode

from .actions import (
    DEFAULT_SPEED_PROFILE,
    ActionSet,
    SpeedProfile,
    angle_limit,
    angular_distance,
    build_action_set,
    children_within,
    heading_bin,
)
from .grid import OccupancyGrid, RegionMask, line_cells

REACHED = "reached"
TIMEOUT = "timeout"
EXHAUSTED = "exhausted"

_STATUS_NAMES = (REACHED, TIMEOUT, EXHAUSTED)

# Euclidean distance is admissible for the remaining path length; the factor
# leaves headroom for float rounding in long cost sums so optimality holds in
# exact float comparison, not just mathematically.
_H_GUARD = 1.0 - 1e-12

# Clearing a per-state best-g table on every call would cost O(states), so
# each thread keeps one table stamped with a call epoch: an entry is live
# only when its stamp matches the current call, and bumping the epoch
# invalidates the whole table in O(1).
_TLS = threading.local()


def _search_workspace(n_states: int):
    ws = getattr(_TLS, "ws", None)
    if ws is None or ws[0].shape[0] < n_states or ws[2] >= np.iinfo(np.int32).max - 1:
        ws = (np.empty(n_states, np.float64), np.zeros(n_states, np.int32), 0)
    ws = (ws[0], ws[1], ws[2] + 1)
    _TLS.ws = ws
    return ws


class PlanError(Exception):
    """Invalid planning query."""


class StartOccupiedError(PlanError):
    """Start cell is blocked on the (inflated) grid."""


class TargetOccupiedError(PlanError):
    """Target cell is blocked on the (inflated) grid."""


@dataclass(frozen=True)
class SearchConfig:
    """Planner knobs.

    w scales cost and heuristic inside the region mask (1 disables the
    bias).  delta_ang_weight converts heading change (radians) into cost
    cells.  theta_bins buckets headings for the closed set.  time_limit is
    in milliseconds.  goal_tolerance is in cells.
    """

    w: float = 0.15
    delta_ang_weight: float = 3.0
    theta_bins: int = 72
    time_limit: float = 100.0
    goal_tolerance: float = 1.0
    tie_break: str = "f-then-h-then-fifo"

    def __post_init__(self):
        if not (0.0 < self.w <= 1.0):
            raise ValueError("w must be in (0, 1]")
        if self.delta_ang_weight < 0:
            raise ValueError("delta_ang_weight must be >= 0")
        if self.theta_bins < 8:
            raise ValueError("theta_bins must be >= 8")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be > 0")
        if self.goal_tolerance < 0:
            raise ValueError("goal_tolerance must be >= 0")
        if self.tie_break != "f-then-h-then-fifo":
            raise ValueError(f"unknown tie_break policy {self.tie_break!r}")


@dataclass
class SearchNode:
    col: int
    row: int
    theta_bin: int
    heading: float
    g: float
    h: float
    f: float
    parent: Optional["SearchNode"] = None


@dataclass(frozen=True)
class SearchStats:
    expanded: int  # nodes popped and expanded (stale pops excluded)
    pushed: int  # nodes pushed onto the open queue
    elapsed_ms: float
    region_hits: int  # expansions whose own cell lies inside the mask


@dataclass(frozen=True)
class PlanResult:
    status: str
    path: tuple[tuple[int, int, float], ...]  # (col, row, heading), start first
    cost: Optional[float]
    stats: SearchStats
    grid_size: tuple[int, int]  # (width, height) of the planned grid
    terminal: Optional[SearchNode] = None
    trace: Optional[np.ndarray] = None  # (n, 3) int32 pop order, when recorded

    @property
    def reached(self) -> bool:
        return self.status == REACHED


def backtrack(terminal: SearchNode) -> list[tuple[int, int, float]]:
    """Poses along the parent chain, root first."""
    poses = []
    node = terminal
    seen = 0
    while node is not None:
        poses.append((node.col, node.row, node.heading))
        node = node.parent
        seen += 1
        if seen > 10_000_000:
            raise RuntimeError("parent chain does not terminate")
    poses.reverse()
    return poses


_DEFAULT_ACTIONS: Optional[ActionSet] = None


def default_action_set() -> ActionSet:
    global _DEFAULT_ACTIONS
    if _DEFAULT_ACTIONS is None:
        _DEFAULT_ACTIONS = build_action_set("coprime")
    return _DEFAULT_ACTIONS


@lru_cache(maxsize=16)
def _action_tables(actions: ActionSet, theta_bins: int):
    """Flat arrays describing the action set, plus per-action swept cells."""
    n = len(actions)
    adx = np.empty(n, np.int64)
    ady = np.empty(n, np.int64)
    adir = np.empty(n, np.float64)
    alen = np.empty(n, np.float64)
    abin = np.empty(n, np.int64)
    line_dc: list[int] = []
    line_dr: list[int] = []
    line_off = np.zeros(n + 1, np.int64)
    for k, a in enumerate(actions):
        adx[k] = a.dx
        ady[k] = a.dy
        adir[k] = a.direction
        alen[k] = a.length
        abin[k] = heading_bin(a.direction, theta_bins)
        cells = line_cells((0, 0), (a.dx, a.dy))[1:]  # origin is the parent cell
        for c, r in cells:
            line_dc.append(c)
            line_dr.append(r)
        line_off[k + 1] = len(line_dc)
    return adx, ady, adir, alen, abin, np.array(line_dc, np.int64), np.array(line_dr, np.int64), line_off


@lru_cache(maxsize=64)
def _successor_tables(actions: ActionSet, limit: float, dang_w: float):
    """For each action, the indices of actions reachable from its heading
    under the angular limit, in table order, with each transition's full
    step cost (length plus weighted heading change) precomputed."""
    acts = actions.actions
    index = {a: i for i, a in enumerate(acts)}
    flat: list[int] = []
    step: list[float] = []
    off = np.zeros(len(acts) + 1, np.int64)
    for k, a in enumerate(acts):
        for child in children_within(actions, a.direction, limit):
            flat.append(index[child])
            step.append(child.length + dang_w * angular_distance(child.direction, a.direction))
        off[k + 1] = len(flat)
    return np.array(flat, np.int64), off, np.array(step, np.float64)


def _allowed_from(actions: ActionSet, heading: float, limit: float, dang_w: float):
    index = {a: i for i, a in enumerate(actions.actions)}
    kids = children_within(actions, heading, limit)
    idx = np.array([index[a] for a in kids], np.int64)
    step = np.array(
        [a.length + dang_w * angular_distance(a.direction, heading) for a in kids],
        np.float64,
    )
    return idx, step


@njit(cache=True, nogil=True)
def _run(occ, region, w_scale, best_g, best_ep, epoch, adx, ady, adir, abin,
         line_dc, line_dr, line_off, succ_flat, succ_off, succ_step,
         start_allowed, start_step,
         start_c, start_r, start_heading, start_bin,
         tgt_c, tgt_r, theta_bins, goal_tol, time_limit_s, trace_on):
    height, width = occ.shape
    guard = _H_GUARD

    with objmode(t_start="f8"):
        t_start = time.perf_counter()

    node_cap = 4096
    ncol = np.empty(node_cap, np.int32)
    nrow = np.empty(node_cap, np.int32)
    nbin = np.empty(node_cap, np.int32)
    naidx = np.empty(node_cap, np.int32)
    nparent = np.empty(node_cap, np.int32)
    nhead = np.empty(node_cap, np.float64)
    ng = np.empty(node_cap, np.float64)
    nh = np.empty(node_cap, np.float64)
    nf = np.empty(node_cap, np.float64)
    n_nodes = 0

    heap_cap = 4096
    hp_f = np.empty(heap_cap, np.float64)
    hp_h = np.empty(heap_cap, np.float64)
    hp_id = np.empty(heap_cap, np.int32)
    heap_n = 0

    trace_cap = 4096 if trace_on else 1
    tr_col = np.empty(trace_cap, np.int32)
    tr_row = np.empty(trace_cap, np.int32)
    tr_bin = np.empty(trace_cap, np.int32)
    n_trace = 0

    # start node
    scale0 = w_scale if region[start_r, start_c] != 0 else 1.0
    ddc = float(tgt_c - start_c)
    ddr = float(tgt_r - start_r)
    h0 = math.sqrt(ddc * ddc + ddr * ddr) * guard * scale0
    ncol[0] = start_c
    nrow[0] = start_r
    nbin[0] = start_bin
    naidx[0] = -1
    nparent[0] = -1
    nhead[0] = start_heading
    ng[0] = 0.0
    nh[0] = h0
    nf[0] = h0
    n_nodes = 1
    skey = (start_r * width + start_c) * theta_bins + start_bin
    best_g[skey] = 0.0
    best_ep[skey] = epoch
    hp_f[0] = h0
    hp_h[0] = h0
    hp_id[0] = 0
    heap_n = 1

    expanded = 0
    pushed = 1
    region_hits = 0
    pops = 0
    status = 2  # exhausted unless decided otherwise
    terminal = -1
    tol_sq = goal_tol * goal_tol

    while heap_n > 0:
        # pop root; heap keys are (f, h, id) lexicographic, id is FIFO order
        node = hp_id[0]
        heap_n -= 1
        if heap_n > 0:
            mf = hp_f[heap_n]
            mh = hp_h[heap_n]
            mid = hp_id[heap_n]
            pos = 0
            while True:
                child = 2 * pos + 1
                if child >= heap_n:
                    break
                right = child + 1
                if right < heap_n:
                    if hp_f[right] < hp_f[child] or (
                        hp_f[right] == hp_f[child]
                        and (
                            hp_h[right] < hp_h[child]
                            or (hp_h[right] == hp_h[child] and hp_id[right] < hp_id[child])
                        )
                    ):
                        child = right
                if hp_f[child] < mf or (
                    hp_f[child] == mf
                    and (hp_h[child] < mh or (hp_h[child] == mh and hp_id[child] < mid))
                ):
                    hp_f[pos] = hp_f[child]
                    hp_h[pos] = hp_h[child]
                    hp_id[pos] = hp_id[child]
                    pos = child
                else:
                    break
            hp_f[pos] = mf
            hp_h[pos] = mh
            hp_id[pos] = mid

        pops += 1
        if (pops & 7) == 1:
            with objmode(t_now="f8"):
                t_now = time.perf_counter()
            if t_now - t_start >= time_limit_s:
                status = 1
                break

        c = ncol[node]
        r = nrow[node]
        key = (r * width + c) * theta_bins + nbin[node]
        g0 = ng[node]
        if g0 > best_g[key]:
            continue  # stale entry; a cheaper route to this state was pushed

        expanded += 1
        if region[r, c] != 0:
            region_hits += 1
        if trace_on:
            if n_trace == trace_cap:
                trace_cap *= 2
                tmp = np.empty(trace_cap, np.int32)
                tmp[:n_trace] = tr_col
                tr_col = tmp
                tmp = np.empty(trace_cap, np.int32)
                tmp[:n_trace] = tr_row
                tr_row = tmp
                tmp = np.empty(trace_cap, np.int32)
                tmp[:n_trace] = tr_bin
                tr_bin = tmp
            tr_col[n_trace] = c
            tr_row[n_trace] = r
            tr_bin[n_trace] = nbin[node]
            n_trace += 1

        dc = float(tgt_c - c)
        dr = float(tgt_r - r)
        if dc * dc + dr * dr <= tol_sq:
            status = 0
            terminal = node
            break

        aidx = naidx[node]
        if aidx >= 0:
            lo = succ_off[aidx]
            hi = succ_off[aidx + 1]
        else:
            lo = 0
            hi = len(start_allowed)
        for m in range(lo, hi):
            if aidx >= 0:
                k = succ_flat[m]
                step = succ_step[m]
            else:
                k = start_allowed[m]
                step = start_step[m]
            nc = c + adx[k]
            nr = r + ady[k]
            if nc < 0 or nc >= width or nr < 0 or nr >= height:
                continue
            blocked = False
            for q in range(line_off[k], line_off[k + 1]):
                if occ[r + line_dr[q], c + line_dc[q]] != 0:
                    blocked = True
                    break
            if blocked:
                continue
            scale = w_scale if region[nr, nc] != 0 else 1.0
            g1 = g0 + step * scale
            key1 = (nr * width + nc) * theta_bins + abin[k]
            if best_ep[key1] == epoch and g1 >= best_g[key1]:
                continue  # re-open only on strictly lower g
            best_g[key1] = g1
            best_ep[key1] = epoch
            dc1 = float(tgt_c - nc)
            dr1 = float(tgt_r - nr)
            h1 = math.sqrt(dc1 * dc1 + dr1 * dr1) * guard * scale
            if n_nodes == node_cap:
                node_cap *= 2
                tmp_i = np.empty(node_cap, np.int32)
                tmp_i[:n_nodes] = ncol
                ncol = tmp_i
                tmp_i = np.empty(node_cap, np.int32)
                tmp_i[:n_nodes] = nrow
                nrow = tmp_i
                tmp_i = np.empty(node_cap, np.int32)
                tmp_i[:n_nodes] = nbin
                nbin = tmp_i
                tmp_i = np.empty(node_cap, np.int32)
                tmp_i[:n_nodes] = naidx
                naidx = tmp_i
                tmp_i = np.empty(node_cap, np.int32)
                tmp_i[:n_nodes] = nparent
                nparent = tmp_i
                tmp_f = np.empty(node_cap, np.float64)
                tmp_f[:n_nodes] = nhead
                nhead = tmp_f
                tmp_f = np.empty(node_cap, np.float64)
                tmp_f[:n_nodes] = ng
                ng = tmp_f
                tmp_f = np.empty(node_cap, np.float64)
                tmp_f[:n_nodes] = nh
                nh = tmp_f
                tmp_f = np.empty(node_cap, np.float64)
                tmp_f[:n_nodes] = nf
                nf = tmp_f
            nid = n_nodes
            ncol[nid] = nc
            nrow[nid] = nr
            nbin[nid] = abin[k]
            naidx[nid] = k
            nparent[nid] = node
            nhead[nid] = adir[k]
            ng[nid] = g1
            nh[nid] = h1
            nf[nid] = g1 + h1
            n_nodes += 1
            # push: node ids grow with push order, so id order is FIFO order
            if heap_n == heap_cap:
                heap_cap *= 2
                tmp_f = np.empty(heap_cap, np.float64)
                tmp_f[:heap_n] = hp_f
                hp_f = tmp_f
                tmp_f = np.empty(heap_cap, np.float64)
                tmp_f[:heap_n] = hp_h
                hp_h = tmp_f
                tmp_i = np.empty(heap_cap, np.int32)
                tmp_i[:heap_n] = hp_id
                hp_id = tmp_i
            pos = heap_n
            heap_n += 1
            f1 = g1 + h1
            while pos > 0:
                up = (pos - 1) // 2
                if f1 < hp_f[up] or (
                    f1 == hp_f[up]
                    and (h1 < hp_h[up] or (h1 == hp_h[up] and nid < hp_id[up]))
                ):
                    hp_f[pos] = hp_f[up]
                    hp_h[pos] = hp_h[up]
                    hp_id[pos] = hp_id[up]
                    pos = up
                else:
                    break
            hp_f[pos] = f1
            hp_h[pos] = h1
            hp_id[pos] = nid
            pushed += 1

    with objmode(t_end="f8"):
        t_end = time.perf_counter()

    return (
        status,
        terminal,
        expanded,
        pushed,
        region_hits,
        (t_end - t_start) * 1000.0,
        ncol[:n_nodes],
        nrow[:n_nodes],
        nbin[:n_nodes],
        nhead[:n_nodes],
        ng[:n_nodes],
        nh[:n_nodes],
        nf[:n_nodes],
        nparent[:n_nodes],
        tr_col[:n_trace],
        tr_row[:n_trace],
        tr_bin[:n_trace],
    )


def _as_uint8(arr: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(arr, dtype=np.uint8)


def _build_terminal(terminal_id: int, cols, rows, bins, heads, gs, hs, fs, parents) -> SearchNode:
    chain = []
    nid = terminal_id
    while nid >= 0:
        chain.append(nid)
        nid = parents[nid]
    node: Optional[SearchNode] = None
    for nid in reversed(chain):
        node = SearchNode(
            col=int(cols[nid]),
            row=int(rows[nid]),
            theta_bin=int(bins[nid]),
            heading=float(heads[nid]),
            g=float(gs[nid]),
            h=float(hs[nid]),
            f=float(fs[nid]),
            parent=node,
        )
    assert node is not None
    return node


def plan(
    grid: OccupancyGrid,
    start: tuple[int, int, float],
    target: tuple[int, int],
    speed: float = 0.0,
    region: Optional[RegionMask] = None,
    cfg: Optional[SearchConfig] = None,
    actions: Optional[ActionSet] = None,
    *,
    profile: SpeedProfile = DEFAULT_SPEED_PROFILE,
    record_trace: bool = False,
) -> PlanResult:
    """Plan from a start pose to a target cell.

    The grid must already be obstacle-inflated for the vehicle footprint.
    With a region mask, cells inside the mask scale both the step cost and
    the heuristic by cfg.w; without one (or with w = 1) the search is the
    plain variant.
    """
    cfg = cfg if cfg is not None else SearchConfig()
    actions = actions if actions is not None else default_action_set()

    start_c, start_r = int(start[0]), int(start[1])
    start_heading = float(start[2])
    tgt_c, tgt_r = int(target[0]), int(target[1])
    if not grid.in_bounds(start_c, start_r):
        raise ValueError(f"start cell ({start_c}, {start_r}) out of bounds")
    if not grid.in_bounds(tgt_c, tgt_r):
        raise ValueError(f"target cell ({tgt_c}, {tgt_r}) out of bounds")
    if grid.occupied[start_r, start_c]:
        raise StartOccupiedError(f"start cell ({start_c}, {start_r}) is occupied")
    if grid.occupied[tgt_r, tgt_c]:
        raise TargetOccupiedError(f"target cell ({tgt_c}, {tgt_r}) is occupied")
    if region is not None and (region.width != grid.width or region.height != grid.height):
        raise ValueError(
            f"region {region.width}x{region.height} does not match grid "
            f"{grid.width}x{grid.height}"
        )

    limit = angle_limit(profile, speed)
    adx, ady, adir, alen, abin, line_dc, line_dr, line_off = _action_tables(
        actions, cfg.theta_bins
    )
    succ_flat, succ_off, succ_step = _successor_tables(
        actions, limit, cfg.delta_ang_weight
    )
    start_allowed, start_step = _allowed_from(
        actions, start_heading, limit, cfg.delta_ang_weight
    )

    occ = _as_uint8(grid.occupied)
    if region is None:
        region_arr = np.zeros_like(occ)
    else:
        region_arr = _as_uint8(region.bits)

    best_g, best_ep, epoch = _search_workspace(grid.height * grid.width * cfg.theta_bins)
    (
        status_code,
        terminal_id,
        expanded,
        pushed,
        region_hits,
        elapsed_ms,
        cols,
        rows,
        bins,
        heads,
        gs,
        hs,
        fs,
        parents,
        tr_col,
        tr_row,
        tr_bin,
    ) = _run(
        occ,
        region_arr,
        float(cfg.w),
        best_g,
        best_ep,
        np.int32(epoch),
        adx,
        ady,
        adir,
        abin,
        line_dc,
        line_dr,
        line_off,
        succ_flat,
        succ_off,
        succ_step,
        start_allowed,
        start_step,
        start_c,
        start_r,
        start_heading,
        heading_bin(start_heading, cfg.theta_bins),
        tgt_c,
        tgt_r,
        cfg.theta_bins,
        float(cfg.goal_tolerance),
        cfg.time_limit / 1000.0,
        record_trace,
    )

    stats = SearchStats(
        expanded=int(expanded),
        pushed=int(pushed),
        elapsed_ms=float(elapsed_ms),
        region_hits=int(region_hits),
    )
    trace = None
    if record_trace:
        trace = np.stack([tr_col, tr_row, tr_bin], axis=1).astype(np.int32)

    if status_code == 0:
        terminal = _build_terminal(int(terminal_id), cols, rows, bins, heads, gs, hs, fs, parents)
        path = tuple(backtrack(terminal))
        return PlanResult(
            status=REACHED,
            path=path,
            cost=terminal.g,
            stats=stats,
            grid_size=(grid.width, grid.height),
            terminal=terminal,
            trace=trace,
        )
    return PlanResult(
        status=_STATUS_NAMES[status_code],
        path=(),
        cost=None,
        stats=stats,
        grid_size=(grid.width, grid.height),
        terminal=None,
        trace=trace,
    )
