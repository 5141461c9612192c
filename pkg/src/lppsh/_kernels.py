"""Compiled inner loops.  Callers validate inputs; kernels assume them sane."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _lower_bound(tails, k, v):
    """First index i < k with tails[i] >= v (k if none); branch-free halving."""
    if k == 0:
        return 0
    base = 0
    n = k
    while n > 1:
        half = n >> 1
        base = base + half if tails[base + half] < v else base
        n -= half
    return base + 1 if tails[base] < v else base


@njit(cache=True)
def lis_ending(seq):
    """Length of the longest strictly increasing subsequence ending at each entry."""
    n = seq.size
    tails = np.empty(n)
    out = np.empty(n, np.int64)
    k = 0
    for i in range(n):
        v = seq[i]
        lo = _lower_bound(tails, k, v)
        tails[lo] = v
        if lo == k:
            k += 1
        out[i] = lo + 1
    return out


@njit(cache=True)
def hammersley_profile(bx, ex, et, ys):
    """Pile counts of a patience sweep over boundary points followed by the
    environment, both sorted by x, reported after all points with x <= ys[j].

    Boundary point i carries pseudo-time i - nb (negative, increasing), so any
    chain collects boundary points first.  ``ys`` must be sorted.
    """
    nb, ne, nq = bx.size, ex.size, ys.size
    tails = np.empty(nb + ne + 1)
    out = np.empty(nq, np.int64)
    k = 0
    i = 0
    j = 0
    q = 0
    while q < nq:
        y = ys[q]
        while True:
            take_b = i < nb and bx[i] <= y and (j >= ne or bx[i] < ex[j])
            take_e = (not take_b) and j < ne and ex[j] <= y
            if not (take_b or take_e):
                break
            if take_b:
                v = float(i - nb)
                i += 1
            else:
                v = et[j]
                j += 1
            lo = _lower_bound(tails, k, v)
            tails[lo] = v
            if lo == k:
                k += 1
        out[q] = k
        q += 1
    return out


@njit(cache=True)
def hammersley_exit(cand, cand_val, ex, et, y, t):
    """Rightmost maximizer of cand_val[c] + H(cand[c], 0; y, t).

    ``cand`` sorted ascending; ``ex`` sorted ascending.  Returns (value, index).
    """
    # environment points inside (cand[0], y] x (0, t]
    m = 0
    idx = np.empty(ex.size, np.int64)
    for j in range(ex.size):
        if ex[j] > cand[0] and ex[j] <= y and et[j] <= t:
            idx[m] = j
            m += 1
    # longest chain starting at each point: sweep right-to-left on -t
    tails = np.empty(m + 1)
    start = np.empty(m, np.int64)
    k = 0
    for r in range(m - 1, -1, -1):
        v = -et[idx[r]]
        lo = _lower_bound(tails, k, v)
        tails[lo] = v
        if lo == k:
            k += 1
        start[r] = lo + 1
    suff = np.zeros(m + 1, np.int64)
    for r in range(m - 1, -1, -1):
        suff[r] = max(suff[r + 1], start[r])
    best = -(1 << 62)
    arg = -1
    r = 0
    for c in range(cand.size):
        if cand[c] > y:
            break
        while r < m and ex[idx[r]] <= cand[c]:
            r += 1
        val = cand_val[c] + suff[r]
        if val >= best:
            best = val
            arg = c
    return best, arg


@njit(cache=True)
def semi_discrete_sweep(delta, h, ex):
    """h_n(k) = max(h_n(k-1) + delta[n, k], h_{n-1}(k)), rightmost-exit ties.

    ``delta`` has one row per level; column 0 is the truncation site and its
    entry is unused.  ``h``/``ex`` are the level -1 values and exits.
    """
    nl, nc = delta.shape
    hv = h.copy()
    ev = ex.copy()
    for n in range(nl):
        # column 0: only the vertical step is available
        for k in range(1, nc):
            a = hv[k - 1] + delta[n, k]
            ea = ev[k - 1]
            b = hv[k]
            eb = ev[k]
            if a > b or (a == b and ea > eb):
                hv[k] = a
                ev[k] = ea
    return hv, ev


@njit(cache=True)
def lattice_sweep(w, h, ex):
    """h_n(k) = w[n, k] + max(h_n(k-1), h_{n-1}(k)) with rightmost-exit ties."""
    nl, nc = w.shape
    hv = h.copy()
    ev = ex.copy()
    for n in range(nl):
        hv[0] = hv[0] + w[n, 0]
        for k in range(1, nc):
            a = hv[k - 1]
            b = hv[k]
            if a > b or (a == b and ev[k - 1] > ev[k]):
                hv[k] = a + w[n, k]
                ev[k] = ev[k - 1]
            else:
                hv[k] = b + w[n, k]
    return hv, ev


@njit(cache=True)
def lines_sweep(pos, val, ex, lvl_pts, offsets):
    """Evolve a right-continuous step profile through Poisson line levels.

    The profile is h(z) = val[j] on [pos[j], pos[j+1]) with exit ex[j];
    pos[0] is the truncation point.  Level i has points
    lvl_pts[offsets[i]:offsets[i+1]] (sorted, > pos[0]).  Each level applies
    h_i(g) = F_i(g) + max_{z <= g}(h_{i-1}(z) - F_i(z)), keeping the
    lexicographic (value, exit) maximum; the result is compressed to the
    points where value or exit changes.
    """
    nlev = offsets.size - 1
    for i in range(nlev):
        a0 = offsets[i]
        a1 = offsets[i + 1]
        np_ = pos.size
        cap = np_ + (a1 - a0)
        npos = np.empty(cap)
        nval = np.empty(cap, np.int64)
        nex = np.empty(cap)
        m = 0
        p = 0
        a = a0
        fcount = 0
        cur_h = val[0]
        cur_e = ex[0]
        best_v = -(1 << 62)
        best_e = -np.inf
        while p < np_ or a < a1:
            if a >= a1 or (p < np_ and pos[p] <= lvl_pts[a]):
                g = pos[p]
            else:
                g = lvl_pts[a]
            if p < np_ and pos[p] == g:
                cur_h = val[p]
                cur_e = ex[p]
                p += 1
            while a < a1 and lvl_pts[a] == g:
                fcount += 1
                a += 1
            c = cur_h - fcount
            if c > best_v or (c == best_v and cur_e > best_e):
                best_v = c
                best_e = cur_e
            hv = fcount + best_v
            if m == 0 or hv != nval[m - 1] or best_e != nex[m - 1]:
                npos[m] = g
                nval[m] = hv
                nex[m] = best_e
                m += 1
        pos = npos[:m].copy()
        val = nval[:m].copy()
        ex = nex[:m].copy()
    return pos, val, ex


@njit(cache=True)
def fluid_run(particles, ev_x, ev_t, ys):
    """Hammersley fluid: each event (in time order) pulls the nearest particle
    strictly to its right onto its x.  Returns final positions, crossing
    counts of each vertical line ys[j], the moved-particle index per event
    (-1 on underflow) and the underflow flag.
    """
    pos = particles.copy()
    n = pos.size
    cross = np.zeros(ys.size, np.int64)
    moved = np.empty(ev_x.size, np.int64)
    under = False
    for e in range(ev_x.size):
        x0 = ev_x[e]
        lo, hi = 0, n
        while lo < hi:  # first particle with position > x0
            mid = (lo + hi) >> 1
            if pos[mid] <= x0:
                lo = mid + 1
            else:
                hi = mid
        if lo == n:
            under = True
            moved[e] = -1
            continue
        old = pos[lo]
        pos[lo] = x0
        moved[e] = lo
        for j in range(ys.size):
            if x0 <= ys[j] and old > ys[j]:
                cross[j] += 1
    return pos, cross, moved, under


@njit(cache=True)
def queue_scan(grid_a, grid_s):
    """Running Q = f - min(0, min f) for f = cumsum(a - s) over grid cells."""
    n = grid_a.size
    q = np.empty(n, np.int64)
    active = np.empty(n, np.bool_)
    f = 0
    mn = 0
    for i in range(n):
        f += grid_a[i] - grid_s[i]
        if f < mn:
            mn = f
        q[i] = f - mn
        active[i] = mn == 0
    return q, active
