"""Exhaustive reference implementations for small instances.

These enumerate paths, chains or breakpoint tuples directly and are used to
certify the fast dynamic programs.
"""
from __future__ import annotations

import itertools

import numpy as np

from .lpp_core import LatticeEnvironment, LineField, SJEnvironment
from .processes import PlanarPointSet


def up_right_paths(dx: int, dy: int):
    """All step sequences with dx right-steps and dy up-steps ('R'/'U')."""
    for ups in itertools.combinations(range(dx + dy), dy):
        steps = ["R"] * (dx + dy)
        for u in ups:
            steps[u] = "U"
        yield steps


def brute_lattice(env: LatticeEnvironment, x, s, y, t) -> float:
    i, j = env.col(x), int(s)
    best = -np.inf
    for steps in up_right_paths(env.col(y) - i, int(t) - j):
        a, b = i, j
        tot = env.weights[a, b]
        for st in steps:
            a, b = (a + 1, b) if st == "R" else (a, b + 1)
            tot += env.weights[a, b]
        best = max(best, tot)
    return float(best)


def brute_sj(env: SJEnvironment, x, s, y, t) -> int:
    i, j = env.col(x), int(s)
    best = 0 if (i == env.col(y) and j == t) else -1
    for steps in up_right_paths(env.col(y) - i, int(t) - j):
        a, b = i, j
        tot = 0
        for st in steps:
            if st == "R":
                a += 1
                tot += env.edges[a, b]
            else:
                b += 1
        best = max(best, tot)
    return int(best)


def brute_hammersley(env: PlanarPointSet, x, s, y, t) -> int:
    pts = [(a, b) for a, b in zip(env.x, env.t) if x < a <= y and s < b <= t]
    best = 0
    for r in range(1, len(pts) + 1):
        for sub in itertools.combinations(sorted(pts), r):
            if all(sub[k][0] < sub[k + 1][0] and sub[k][1] < sub[k + 1][1] for k in range(r - 1)):
                best = max(best, r)
    return best


def brute_lines(env: LineField, x, m, y, n) -> int:
    levels = env.levels[m:n + 1]
    cand = sorted({x, y, *[v for lv in levels for v in lv.points if x < v <= y]})
    best = -1
    k = len(levels) - 1  # free breakpoints x_m, ..., x_{n-1}
    for bp in itertools.combinations_with_replacement(cand, k):
        xs = [x, *bp, y]
        best = max(best, sum(lv.count(xs[i], xs[i + 1]) for i, lv in enumerate(levels)))
    return best


def brute_blpp(env: LineField, x, m, y, n) -> float:
    k0, k1 = env.grid_index(x), env.grid_index(y)
    P = env.paths
    best = -np.inf
    for bp in itertools.combinations_with_replacement(range(k0, k1 + 1), n - m):
        ks = [k0, *bp, k1]
        best = max(best, sum(P[m + i, ks[i + 1]] - P[m + i, ks[i]] for i in range(n - m + 1)))
    return float(best)


def brute_height(candidates, f_values, passage) -> tuple[float, float]:
    """max_c f(c) + passage(c) with the rightmost maximizer."""
    best, arg = -np.inf, None
    for c, fv in zip(candidates, f_values):
        v = fv + passage(c)
        if v >= best:
            best, arg = v, c
    return best, arg
