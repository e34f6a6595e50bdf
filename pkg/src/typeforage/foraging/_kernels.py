"""Compiled inner loops for the foraging world and the tree search.

Everything operates on plain numpy arrays so planner rollouts never touch
Python objects. Randomness comes from an explicit xorshift128+ state
(uint64 pair) owned by the caller, keeping every stream reproducible and
independent of numpy's global generator. Grid cells are (row, col) with
row 0 at the top; actions are N, E, S, W, load = 0..4.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

N_ACTIONS = 5
LOAD = 4
DROW = np.array([-1, 0, 1, 0], dtype=np.int64)
DCOL = np.array([0, 1, 0, -1], dtype=np.int64)

_FNV_OFFSET = np.uint64(1469598103934665603)
_FNV_PRIME = np.uint64(1099511628211)
_U5 = np.uint64(5)
_U11 = np.uint64(11)
_U18 = np.uint64(18)
_U23 = np.uint64(23)
_U27 = np.uint64(27)
_U30 = np.uint64(30)
_U31 = np.uint64(31)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def seed_rng(seed):
    """xorshift128+ state from a 64-bit seed via two splitmix64 rounds."""
    state = np.empty(2, dtype=np.uint64)
    z = np.uint64(seed)
    for i in range(2):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        t = z
        t = (t ^ (t >> _U30)) * np.uint64(0xBF58476D1CE4E5B9)
        t = (t ^ (t >> _U27)) * np.uint64(0x94D049BB133111EB)
        state[i] = t ^ (t >> _U31)
    if state[0] == np.uint64(0) and state[1] == np.uint64(0):
        state[0] = np.uint64(1)
    return state


@njit(cache=True)
def rand_u64(state):
    s1 = state[0]
    s0 = state[1]
    state[0] = s0
    s1 = s1 ^ (s1 << _U23)
    state[1] = s1 ^ s0 ^ (s1 >> _U18) ^ (s0 >> _U5)
    return state[1] + s0


@njit(cache=True)
def rand_u01(state):
    return float(rand_u64(state) >> _U11) * _INV53


@njit(cache=True)
def rand_below(state, n):
    return int(rand_u01(state) * n)


@njit(cache=True)
def cell_certainty(apex_r, apex_c, head_r, head_c, cos_half, radius2, cell_r, cell_c):
    """Fraction of an 8x8 sub-grid of the cell lying inside the view sector.

    The angular test compares squared dot products so no square roots are
    needed; a tiny slack keeps exact-boundary samples (full-circle view,
    Cauchy-Schwarz equality) on the inside.
    """
    count = 0
    for i in range(8):
        dr = cell_r + (i + 0.5) / 8.0 - apex_r
        for j in range(8):
            dc = cell_c + (j + 0.5) / 8.0 - apex_c
            d2 = dr * dr + dc * dc
            if d2 > radius2:
                continue
            if d2 == 0.0:
                count += 1
                continue
            dot = dr * head_r + dc * head_c
            if cos_half >= 0.0:
                if dot >= 0.0 and dot * dot >= cos_half * cos_half * d2 - 1e-12:
                    count += 1
            else:
                if dot >= 0.0 or dot * dot <= cos_half * cos_half * d2 + 1e-12:
                    count += 1
    return count / 64.0


@njit(cache=True)
def fill_visibility(
    viewer, view_r, view_c, heading, p2, p3,
    rows, cols, irows, icols, collected, w, h, amask, imask,
):
    """Visibility masks for a sector view from (view_r, view_c).

    ``viewer`` is the index of the agent standing at the viewpoint (excluded
    from its own agent mask). Collected items are never visible.
    """
    diag = math.sqrt(float(w * w + h * h))
    radius2 = (p2 * diag) * (p2 * diag)
    half = p3 * math.pi
    if half > math.pi:
        half = math.pi
    cos_half = math.cos(half)
    ar = view_r + 0.5
    ac = view_c + 0.5
    hr = float(DROW[heading])
    hc = float(DCOL[heading])
    for a in range(rows.shape[0]):
        if a == viewer:
            amask[a] = 0
            continue
        cert = cell_certainty(ar, ac, hr, hc, cos_half, radius2, float(rows[a]), float(cols[a]))
        amask[a] = 1 if cert >= 0.1 else 0
    for it in range(irows.shape[0]):
        if collected[it] != 0:
            imask[it] = 0
            continue
        cert = cell_certainty(ar, ac, hr, hc, cos_half, radius2, float(irows[it]), float(icols[it]))
        imask[it] = 1 if cert >= 0.1 else 0


@njit(cache=True)
def _pick_furthest_item(from_r, from_c, irows, icols, imask):
    best = -1
    best_d2 = np.int64(-1)
    for it in range(irows.shape[0]):
        if imask[it] == 0:
            continue
        dr = irows[it] - from_r
        dc = icols[it] - from_c
        d2 = dr * dr + dc * dc
        if d2 > best_d2 or (
            d2 == best_d2
            and (irows[it] < irows[best] or (irows[it] == irows[best] and icols[it] < icols[best]))
        ):
            best = it
            best_d2 = d2
    return best


@njit(cache=True)
def _pick_level_item(own_level, irows, icols, ilevels, imask):
    # highest level strictly below own level, else highest level overall
    best = -1
    best_lv = -1.0
    for it in range(irows.shape[0]):
        if imask[it] == 0 or ilevels[it] >= own_level:
            continue
        if ilevels[it] > best_lv or (
            ilevels[it] == best_lv
            and (irows[it] < irows[best] or (irows[it] == irows[best] and icols[it] < icols[best]))
        ):
            best = it
            best_lv = ilevels[it]
    if best >= 0:
        return best
    for it in range(irows.shape[0]):
        if imask[it] == 0:
            continue
        if ilevels[it] > best_lv or (
            ilevels[it] == best_lv
            and (irows[it] < irows[best] or (irows[it] == irows[best] and icols[it] < icols[best]))
        ):
            best = it
            best_lv = ilevels[it]
    return best


@njit(cache=True)
def _pick_furthest_agent(from_r, from_c, rows, cols, amask):
    best = -1
    best_d2 = np.int64(-1)
    for a in range(rows.shape[0]):
        if amask[a] == 0:
            continue
        dr = rows[a] - from_r
        dc = cols[a] - from_c
        d2 = dr * dr + dc * dc
        if d2 > best_d2 or (
            d2 == best_d2
            and (rows[a] < rows[best] or (rows[a] == rows[best] and cols[a] < cols[best]))
        ):
            best = a
            best_d2 = d2
    return best


@njit(cache=True)
def _pick_level_agent(own_level, from_r, from_c, rows, cols, levels, amask):
    # highest level strictly above own level, else furthest agent
    best = -1
    best_lv = -1.0
    for a in range(rows.shape[0]):
        if amask[a] == 0 or levels[a] <= own_level:
            continue
        if levels[a] > best_lv or (
            levels[a] == best_lv
            and (rows[a] < rows[best] or (rows[a] == rows[best] and cols[a] < cols[best]))
        ):
            best = a
            best_lv = levels[a]
    if best >= 0:
        return best
    return _pick_furthest_agent(from_r, from_c, rows, cols, amask)


@njit(cache=True)
def choose_target_from_masks(
    kind, aidx, p1, lview_p2, lview_p3,
    rows, cols, levels, headings, irows, icols, ilevels, collected,
    w, h, amask, imask, amask2, imask2,
):
    """Destination cell for one of the four target rules, (-1, -1) if none.

    ``amask``/``imask`` are the chooser's own visibility; the follower kinds
    run a second visibility pass from their chosen leader's cell and heading,
    with per-agent view parameters taken from ``lview_p2``/``lview_p3``.
    """
    own_r = rows[aidx]
    own_c = cols[aidx]
    items_any = False
    for it in range(imask.shape[0]):
        if imask[it] != 0:
            items_any = True
            break
    agents_any = False
    for a in range(amask.shape[0]):
        if amask[a] != 0:
            agents_any = True
            break

    if kind == 0:
        it = _pick_furthest_item(own_r, own_c, irows, icols, imask)
        if it < 0:
            return np.int64(-1), np.int64(-1)
        return irows[it], icols[it]

    if kind == 1:
        it = _pick_level_item(p1, irows, icols, ilevels, imask)
        if it < 0:
            return np.int64(-1), np.int64(-1)
        return irows[it], icols[it]

    if not agents_any:
        return np.int64(-1), np.int64(-1)

    if kind == 2:
        leader = _pick_furthest_agent(own_r, own_c, rows, cols, amask)
    else:
        leader = _pick_level_agent(p1, own_r, own_c, rows, cols, levels, amask)
    if not items_any:
        return rows[leader], cols[leader]

    fill_visibility(
        leader, rows[leader], cols[leader], headings[leader],
        lview_p2[leader], lview_p3[leader],
        rows, cols, irows, icols, collected, w, h, amask2, imask2,
    )
    if kind == 2:
        it = _pick_furthest_item(rows[leader], cols[leader], irows, icols, imask2)
    else:
        it = _pick_level_item(levels[leader], irows, icols, ilevels, imask2)
    if it < 0:
        return np.int64(-1), np.int64(-1)
    return irows[it], icols[it]


@njit(cache=True)
def astar_path(blocked, w, h, sr, sc, tr, tc, gcost, parent, heapk, heapc, path_out):
    """Moves of a shortest 4-connected path from (sr, sc) to (tr, tc).

    Returns the path length, or -1 when the target is unreachable, in which
    case path_out[0] holds the legal move minimising straight-line distance
    to the target (in-grid moves if everything is blocked, N as a last
    resort). Neighbours are pushed in N, E, S, W order and equal-f entries
    pop in insertion order, which fixes the tie-break.
    """
    n_cells = w * h
    for i in range(n_cells):
        gcost[i] = -1
        parent[i] = -1
    start = sr * w + sc
    target = tr * w + tc
    gcost[start] = 0
    heap_len = 0
    seq = np.int64(0)
    f0 = abs(sr - tr) + abs(sc - tc)
    # push start
    heapk[0] = f0 * np.int64(1048576) + seq
    heapc[0] = start
    heap_len = 1
    seq += 1
    found = False
    while heap_len > 0:
        key = heapk[0]
        cell = heapc[0]
        heap_len -= 1
        if heap_len > 0:
            lk = heapk[heap_len]
            lc = heapc[heap_len]
            pos = 0
            while True:
                child = 2 * pos + 1
                if child >= heap_len:
                    break
                if child + 1 < heap_len and heapk[child + 1] < heapk[child]:
                    child += 1
                if heapk[child] >= lk:
                    break
                heapk[pos] = heapk[child]
                heapc[pos] = heapc[child]
                pos = child
            heapk[pos] = lk
            heapc[pos] = lc
        if cell == target:
            found = True
            break
        cr = cell // w
        cc = cell % w
        g = gcost[cell]
        if (key // np.int64(1048576)) > g + abs(cr - tr) + abs(cc - tc):
            continue  # stale entry superseded by a better g
        for a in range(4):
            nr = cr + DROW[a]
            nc = cc + DCOL[a]
            if nr < 0 or nr >= h or nc < 0 or nc >= w:
                continue
            ncell = nr * w + nc
            if blocked[ncell] != 0 and ncell != target:
                continue
            ng = g + 1
            if gcost[ncell] >= 0 and gcost[ncell] <= ng:
                continue
            gcost[ncell] = ng
            parent[ncell] = a
            if heap_len < heapk.shape[0]:
                nk = (ng + abs(nr - tr) + abs(nc - tc)) * np.int64(1048576) + seq
                seq += 1
                pos = heap_len
                heap_len += 1
                while pos > 0:
                    up = (pos - 1) // 2
                    if heapk[up] <= nk:
                        break
                    heapk[pos] = heapk[up]
                    heapc[pos] = heapc[up]
                    pos = up
                heapk[pos] = nk
                heapc[pos] = ncell
    if found:
        length = gcost[target]
        cell = target
        for i in range(length - 1, -1, -1):
            a = parent[cell]
            path_out[i] = a
            cell = (cell // w - DROW[a]) * w + (cell % w - DCOL[a])
        return length
    # greedy fallback among legal moves, then among in-grid moves
    best_a = -1
    best_d = np.int64(1 << 40)
    for a in range(4):
        nr = sr + DROW[a]
        nc = sc + DCOL[a]
        if nr < 0 or nr >= h or nc < 0 or nc >= w:
            continue
        ncell = nr * w + nc
        if blocked[ncell] != 0 and ncell != target:
            continue
        d = (nr - tr) * (nr - tr) + (nc - tc) * (nc - tc)
        if d < best_d:
            best_d = d
            best_a = a
    if best_a < 0:
        for a in range(4):
            nr = sr + DROW[a]
            nc = sc + DCOL[a]
            if nr < 0 or nr >= h or nc < 0 or nc >= w:
                continue
            d = (nr - tr) * (nr - tr) + (nc - tc) * (nc - tc)
            if d < best_d:
                best_d = d
                best_a = a
    path_out[0] = best_a if best_a >= 0 else 0
    return -1


@njit(cache=True)
def type_step(
    kind, aidx, p1, p2, p3, lview_p2, lview_p3, mem_r, mem_c,
    rows, cols, levels, headings, irows, icols, ilevels, collected, w, h,
    probs, amask, imask, amask2, imask2, blocked, gcost, parent, heapk, heapc, path_out,
):
    """One step of the shared foraging-type template.

    Keeps the remembered destination until reached, otherwise picks a new
    target for ``kind``; emits load next to a destination item, the first
    A* move towards any other destination, and uniform moves with no
    destination; 0.01 is mixed into every action before normalising.
    Returns the new destination memory.
    """
    loc_r = rows[aidx]
    loc_c = cols[aidx]
    if mem_r >= 0 and not (loc_r == mem_r and loc_c == mem_c):
        dest_r = mem_r
        dest_c = mem_c
    else:
        fill_visibility(
            aidx, loc_r, loc_c, headings[aidx], p2, p3,
            rows, cols, irows, icols, collected, w, h, amask, imask,
        )
        dest_r, dest_c = choose_target_from_masks(
            kind, aidx, p1, lview_p2, lview_p3,
            rows, cols, levels, headings, irows, icols, ilevels, collected,
            w, h, amask, imask, amask2, imask2,
        )
    for a in range(N_ACTIONS):
        probs[a] = 0.0
    if dest_r < 0:
        for a in range(4):
            probs[a] = 0.25
    else:
        dest_item = False
        for it in range(irows.shape[0]):
            if collected[it] == 0 and irows[it] == dest_r and icols[it] == dest_c:
                dest_item = True
                break
        adjacent = abs(loc_r - dest_r) + abs(loc_c - dest_c) == 1
        if dest_item and adjacent:
            probs[LOAD] = 1.0
        else:
            n_cells = w * h
            for i in range(n_cells):
                blocked[i] = 0
            for a2 in range(rows.shape[0]):
                if a2 != aidx:
                    blocked[rows[a2] * w + cols[a2]] = 1
            for it in range(irows.shape[0]):
                if collected[it] == 0:
                    blocked[irows[it] * w + icols[it]] = 1
            blocked[dest_r * w + dest_c] = 0
            astar_path(blocked, w, h, loc_r, loc_c, dest_r, dest_c, gcost, parent, heapk, heapc, path_out)
            probs[path_out[0]] = 1.0
    for a in range(N_ACTIONS):
        probs[a] = (probs[a] + 0.01) / 1.05
    return dest_r, dest_c


@njit(cache=True)
def world_step(w, h, rows, cols, headings, levels, irows, icols, ilevels, collected, actions, rng, order):
    """Advance the world one step in place; returns items collected.

    Loads resolve first and simultaneously: each uncollected item is
    collected when the levels of 4-adjacent loading agents pool to at least
    its level. Moves then execute in a random agent order; a move succeeds
    only into an in-grid cell free of agents and uncollected items, and a
    successful move turns the agent's heading.
    """
    n = rows.shape[0]
    m = irows.shape[0]
    reward = 0
    for it in range(m):
        if collected[it] != 0:
            continue
        pool = 0.0
        loaders = 0
        for a in range(n):
            if actions[a] == LOAD and abs(rows[a] - irows[it]) + abs(cols[a] - icols[it]) == 1:
                pool += levels[a]
                loaders += 1
        if loaders > 0 and pool >= ilevels[it] - 1e-12:
            collected[it] = 1
            reward += 1
    for i in range(n):
        order[i] = i
    for i in range(n - 1, 0, -1):
        j = rand_below(rng, i + 1)
        tmp = order[i]
        order[i] = order[j]
        order[j] = tmp
    for k in range(n):
        mover = order[k]
        act = actions[mover]
        if act < 0 or act >= 4:
            continue
        nr = rows[mover] + DROW[act]
        nc = cols[mover] + DCOL[act]
        if nr < 0 or nr >= h or nc < 0 or nc >= w:
            continue
        occupied = False
        for a2 in range(n):
            if a2 != mover and rows[a2] == nr and cols[a2] == nc:
                occupied = True
                break
        if not occupied:
            for it in range(m):
                if collected[it] == 0 and irows[it] == nr and icols[it] == nc:
                    occupied = True
                    break
        if not occupied:
            rows[mover] = nr
            cols[mover] = nc
            headings[mover] = act
    return reward


@njit(cache=True)
def state_digest(rows, cols, headings, collected):
    d = _FNV_OFFSET
    for i in range(rows.shape[0]):
        d = (d ^ np.uint64(rows[i])) * _FNV_PRIME
        d = (d ^ np.uint64(cols[i])) * _FNV_PRIME
        d = (d ^ np.uint64(headings[i])) * _FNV_PRIME
    for it in range(collected.shape[0]):
        d = (d ^ np.uint64(collected[it])) * _FNV_PRIME
    return np.int64(d & np.uint64(0x7FFFFFFFFFFFFFFF))


@njit(cache=True)
def _alloc_scratch(n, m, n_cells):
    amask = np.empty(n, np.uint8)
    imask = np.empty(m, np.uint8)
    amask2 = np.empty(n, np.uint8)
    imask2 = np.empty(m, np.uint8)
    blocked = np.empty(n_cells, np.uint8)
    gcost = np.empty(n_cells, np.int64)
    parent = np.empty(n_cells, np.int64)
    heapk = np.empty(4 * n_cells + 8, np.int64)
    heapc = np.empty(4 * n_cells + 8, np.int64)
    path_out = np.empty(n_cells + 1, np.int64)
    return amask, imask, amask2, imask2, blocked, gcost, parent, heapk, heapc, path_out


@njit(cache=True)
def replay_type(
    kind, aidx, p1, p2, p3,
    hrows, hcols, hheads, hcoll, levels, irows, icols, ilevels, w, h, L, probs,
):
    """Replay a type over snapshots 0..L-1 from a fresh (empty) memory.

    Fills ``probs`` with the action distribution at snapshot L-1 and returns
    the destination memory after that step.
    """
    n = hrows.shape[1]
    m = irows.shape[0]
    amask, imask, amask2, imask2, blocked, gcost, parent, heapk, heapc, path_out = _alloc_scratch(n, m, w * h)
    lview_p2 = np.full(n, p2)
    lview_p3 = np.full(n, p3)
    mem_r = np.int64(-1)
    mem_c = np.int64(-1)
    for t in range(L):
        mem_r, mem_c = type_step(
            kind, aidx, p1, p2, p3, lview_p2, lview_p3, mem_r, mem_c,
            hrows[t], hcols[t], levels, hheads[t], irows, icols, ilevels, hcoll[t], w, h,
            probs, amask, imask, amask2, imask2, blocked, gcost, parent, heapk, heapc, path_out,
        )
    return mem_r, mem_c


@njit(cache=True)
def replay_loglik(
    kind, aidx, p1, p2, p3,
    hrows, hcols, hheads, hcoll, hacts, levels, irows, icols, ilevels, w, h, n_actions_observed,
):
    """Summed log-probability of the agent's observed actions under a replay."""
    n = hrows.shape[1]
    m = irows.shape[0]
    amask, imask, amask2, imask2, blocked, gcost, parent, heapk, heapc, path_out = _alloc_scratch(n, m, w * h)
    probs = np.empty(N_ACTIONS, np.float64)
    lview_p2 = np.full(n, p2)
    lview_p3 = np.full(n, p3)
    mem_r = np.int64(-1)
    mem_c = np.int64(-1)
    total = 0.0
    for t in range(n_actions_observed):
        mem_r, mem_c = type_step(
            kind, aidx, p1, p2, p3, lview_p2, lview_p3, mem_r, mem_c,
            hrows[t], hcols[t], levels, hheads[t], irows, icols, ilevels, hcoll[t], w, h,
            probs, amask, imask, amask2, imask2, blocked, gcost, parent, heapk, heapc, path_out,
        )
        p = probs[hacts[t, aidx]]
        if p < 1e-12:
            p = 1e-12
        total += math.log(p)
    return total


@njit(cache=True)
def opponents_act(
    kinds, tparams, tmem, lview_p2, lview_p3,
    rows, cols, headings, levels, irows, icols, ilevels, collected, w, h,
    rng, actions_out,
):
    """Sample one action per modelled agent, advancing their memories in place.

    ``lview_p2``/``lview_p3`` give, per modelled agent, the view parameters
    to use per potential leader. ``actions_out`` has one slot per modelled
    agent (world index = slot + 1).
    """
    n = rows.shape[0]
    m = irows.shape[0]
    amask, imask, amask2, imask2, blocked, gcost, parent, heapk, heapc, path_out = _alloc_scratch(n, m, w * h)
    probs = np.empty(N_ACTIONS, np.float64)
    for o in range(kinds.shape[0]):
        mem_r, mem_c = type_step(
            kinds[o], o + 1, tparams[o, 0], tparams[o, 1], tparams[o, 2],
            lview_p2[o], lview_p3[o], tmem[o, 0], tmem[o, 1],
            rows, cols, levels, headings, irows, icols, ilevels, collected, w, h,
            probs, amask, imask, amask2, imask2, blocked, gcost, parent, heapk, heapc, path_out,
        )
        tmem[o, 0] = mem_r
        tmem[o, 1] = mem_c
        u = rand_u01(rng)
        acc = 0.0
        act = LOAD
        for a in range(N_ACTIONS):
            acc += probs[a]
            if u < acc:
                act = a
                break
        actions_out[o] = act
    return 0


@njit(cache=True)
def uct_plan(
    w, h, rows, cols, headings, levels, irows, icols, ilevels, collected,
    belief, est, mem0,
    node_visits, action_visits, action_value, children, meta,
    rollouts, horizon, discount, c_explore, rng,
):
    """Run UCT rollouts from the given state and return the root action.

    Each rollout samples one type per modelled agent from the belief and
    holds it fixed; their memories start from ``mem0`` (replayed under the
    current estimates). The controlled agent follows UCB inside the tree
    and acts uniformly at random beyond it; children are keyed by
    (action, next-state digest) so opponent stochasticity and move-order
    ties live in the transition. Returns are discounted and normalised by
    the item count remaining at the root. ``meta`` is [root id, node count].
    """
    n = rows.shape[0]
    m = irows.shape[0]
    n_opp = belief.shape[0]
    n_types = belief.shape[1]
    n_cells = w * h

    cr = np.empty(n, np.int64)
    cc = np.empty(n, np.int64)
    chead = np.empty(n, np.int64)
    ccoll = np.empty(m, np.uint8)
    tk = np.empty(max(n_opp, 1), np.int64)
    mem_r = np.empty(max(n_opp, 1), np.int64)
    mem_c = np.empty(max(n_opp, 1), np.int64)
    actions = np.empty(n, np.int64)
    order = np.empty(n, np.int64)
    probs = np.empty(N_ACTIONS, np.float64)
    lp2 = np.empty(n, np.float64)
    lp3 = np.empty(n, np.float64)
    clevels = np.empty(n, np.float64)
    amask, imask, amask2, imask2, blocked, gcost, parent, heapk, heapc, path_out = _alloc_scratch(n, m, n_cells)
    rewards = np.empty(horizon, np.float64)
    path_node = np.empty(horizon, np.int64)
    path_act = np.empty(horizon, np.int64)

    root = meta[0]
    remaining0 = 0
    for it in range(m):
        if collected[it] == 0:
            remaining0 += 1
    norm = float(remaining0) if remaining0 > 0 else 1.0

    for _ in range(rollouts):
        for i in range(n):
            cr[i] = rows[i]
            cc[i] = cols[i]
            chead[i] = headings[i]
        for it in range(m):
            ccoll[it] = collected[it]
        remaining = remaining0
        for o in range(n_opp):
            u = rand_u01(rng)
            acc = 0.0
            pick = n_types - 1
            for t_ in range(n_types):
                acc += belief[o, t_]
                if u < acc:
                    pick = t_
                    break
            tk[o] = pick
            mem_r[o] = mem0[o, pick, 0]
            mem_c[o] = mem0[o, pick, 1]
        # Imagined skill levels: our own is known, the modelled agents get
        # the sampled type's estimate. True levels are hidden from the
        # planner, so load pooling in rollouts must use these.
        clevels[0] = levels[0]
        for o in range(n_opp):
            clevels[o + 1] = est[o, tk[o], 0]

        node = root
        in_tree = True
        plen = 0
        depth = 0
        while depth < horizon and remaining > 0:
            if in_tree:
                my_a = -1
                for a in range(N_ACTIONS):
                    if action_visits[node, a] == 0:
                        my_a = a
                        break
                if my_a < 0:
                    log_n = math.log(float(node_visits[node]))
                    best_u = -1e300
                    for a in range(N_ACTIONS):
                        ucb = action_value[node, a] + c_explore * math.sqrt(log_n / float(action_visits[node, a]))
                        if ucb > best_u:
                            best_u = ucb
                            my_a = a
            else:
                my_a = rand_below(rng, N_ACTIONS)
            actions[0] = my_a

            for o in range(n_opp):
                k_ = tk[o]
                p1 = est[o, k_, 0]
                p2 = est[o, k_, 1]
                p3 = est[o, k_, 2]
                for j in range(n):
                    lp2[j] = p2
                    lp3[j] = p3
                nmr, nmc = type_step(
                    k_, o + 1, p1, p2, p3, lp2, lp3, mem_r[o], mem_c[o],
                    cr, cc, clevels, chead, irows, icols, ilevels, ccoll, w, h,
                    probs, amask, imask, amask2, imask2, blocked, gcost, parent, heapk, heapc, path_out,
                )
                mem_r[o] = nmr
                mem_c[o] = nmc
                u = rand_u01(rng)
                acc = 0.0
                act = LOAD
                for a in range(N_ACTIONS):
                    acc += probs[a]
                    if u < acc:
                        act = a
                        break
                actions[o + 1] = act

            rew = world_step(w, h, cr, cc, chead, clevels, irows, icols, ilevels, ccoll, actions, rng, order)
            remaining -= rew
            rewards[depth] = float(rew)

            if in_tree:
                path_node[plen] = node
                path_act[plen] = my_a
                plen += 1
                dg = state_digest(cr, cc, chead, ccoll)
                key = (node * N_ACTIONS + my_a, dg)
                if key in children:
                    node = children[key]
                else:
                    new_id = meta[1]
                    if new_id < node_visits.shape[0]:
                        meta[1] = new_id + 1
                        node_visits[new_id] = 0
                        for a in range(N_ACTIONS):
                            action_visits[new_id, a] = 0
                            action_value[new_id, a] = 0.0
                        children[key] = new_id
                    in_tree = False
            depth += 1

        g = 0.0
        for t_ in range(depth - 1, -1, -1):
            g = rewards[t_] + discount * g
            rewards[t_] = g
        for i in range(plen):
            nd = path_node[i]
            a = path_act[i]
            val = rewards[i] / norm
            node_visits[nd] += 1
            action_visits[nd, a] += 1
            action_value[nd, a] += (val - action_value[nd, a]) / float(action_visits[nd, a])

    best_a = 0
    best_v = np.int64(-1)
    best_m = -1e300
    for a in range(N_ACTIONS):
        v = action_visits[root, a]
        mv = action_value[root, a]
        if v > best_v or (v == best_v and mv > best_m):
            best_v = v
            best_m = mv
            best_a = a
    return best_a
