"""Point-to-point last-passage values for the six models.

Coordinate conventions: the first coordinate is horizontal (space), the
second the level or time.  Lattice-type arrays are indexed ``[i, j]`` with
``i`` the column (offset by ``x_lo``) and ``j`` the level.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .processes import DomainError, ParameterError, PlanarPointSet, PointSet
from .rng import RngStream


@dataclass(frozen=True)
class PassageQuery:
    x: float
    s: float
    y: float
    t: float

    def __post_init__(self):
        if self.x > self.y or self.s > self.t:
            raise ParameterError("passage query must satisfy x <= y and s <= t")


def _as_query(q) -> PassageQuery:
    return q if isinstance(q, PassageQuery) else PassageQuery(*q)


def _col(ncols: int, x_lo: int, x) -> int:
    i = int(np.floor(x)) - x_lo
    if not 0 <= i < ncols:
        raise DomainError(f"column {x} outside environment")
    return i


@dataclass(frozen=True, eq=False)
class LatticeEnvironment:
    """Vertex weights ``weights[i, j]`` at site ``(x_lo + i, j)``."""

    weights: np.ndarray
    law: str = "exp"
    x_lo: int = 0
    gamma: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2:
            raise ParameterError("weights must be 2-D")
        if np.any(w < 0):
            raise ParameterError("weights must be nonnegative")
        if self.law == "geom" and np.any(w != np.floor(w)):
            raise ParameterError("geometric weights must be integers")
        object.__setattr__(self, "weights", w)

    @property
    def shape(self):
        return self.weights.shape

    def col(self, x) -> int:
        return _col(self.weights.shape[0], self.x_lo, x)


@dataclass(frozen=True, eq=False)
class SJEnvironment:
    """Horizontal edge weights: ``edges[i, j]`` sits on the edge entering
    column ``x_lo + i`` at level ``j`` (from column ``x_lo + i - 1``)."""

    edges: np.ndarray
    p: float
    x_lo: int = 0

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64)
        if e.ndim != 2 or not np.all((e == 0) | (e == 1)):
            raise ParameterError("edges must be a 2-D 0/1 array")
        object.__setattr__(self, "edges", e)

    def col(self, x) -> int:
        return _col(self.edges.shape[0], self.x_lo, x)


@dataclass(frozen=True, eq=False)
class LineField:
    """Poisson lines (``levels`` a list of PointSets) or Brownian levels.

    For Brownian levels ``paths[j, k]`` is B_j at ``x_lo + k*delta``.
    """

    levels: tuple | None = None
    paths: np.ndarray | None = None
    delta: float = 0.0
    x_lo: float = 0.0

    def __post_init__(self):
        if self.levels is not None:
            lv = tuple(self.levels)
            if len({p.window for p in lv}) > 1:
                raise ParameterError("all levels must share one window")
            object.__setattr__(self, "levels", lv)
        elif self.paths is not None:
            if not self.delta > 0:
                raise ParameterError("Brownian field needs a positive grid step")
            object.__setattr__(self, "paths", np.asarray(self.paths, dtype=float))
        else:
            raise ParameterError("LineField needs levels or paths")

    @property
    def brownian(self) -> bool:
        return self.paths is not None

    @property
    def n_levels(self) -> int:
        return self.paths.shape[0] if self.brownian else len(self.levels)

    def grid_index(self, x: float) -> int:
        k = (x - self.x_lo) / self.delta
        kr = int(round(k))
        if abs(k - kr) > 1e-9:
            warnings.warn(f"x={x} snapped to the Brownian grid", stacklevel=3)
        if not 0 <= kr < self.paths.shape[1]:
            raise DomainError(f"x={x} outside Brownian grid")
        return kr


# ---------------------------------------------------------------- lattice

def lattice_lpp(env: LatticeEnvironment, q, geodesic: bool = False):
    """Maximal vertex-weight sum over up-right paths, both endpoints included."""
    q = _as_query(q)
    i0, i1 = env.col(q.x), env.col(q.y)
    j0, j1 = int(q.s), int(q.t)
    if not (0 <= j0 <= j1 < env.weights.shape[1]):
        raise DomainError("levels outside environment")
    w = env.weights[i0:i1 + 1, j0:j1 + 1]
    G = np.full((w.shape[0] + 1, w.shape[1] + 1), -np.inf)
    G[1, 0] = 0.0
    for i in range(w.shape[0]):
        for j in range(w.shape[1]):
            G[i + 1, j + 1] = w[i, j] + max(G[i, j + 1], G[i + 1, j])
    val = float(G[-1, -1])
    if not geodesic:
        return val
    # backtrack; prefer the step from below on ties (rightmost path)
    path = []
    i, j = w.shape[0], w.shape[1]
    while True:
        path.append((i0 + i - 1 + env.x_lo, j0 + j - 1))
        if i == 1 and j == 1:
            break
        below = G[i, j - 1] if j > 1 else -np.inf
        left = G[i - 1, j] if i > 1 else -np.inf
        if below >= left:
            j -= 1
        else:
            i -= 1
    return val, path[::-1]


def lattice_from_point(env: LatticeEnvironment, x: int, s: int, t: int) -> np.ndarray:
    """d((x, s), (y, t)) for every column y of the environment (-inf left of x)."""
    i0 = env.col(x)
    nc = env.weights.shape[0]
    h = np.full(nc, -np.inf)
    h[i0] = 0.0
    ex = np.zeros(nc)
    w = np.ascontiguousarray(env.weights[:, s:t + 1].T)
    # level s-1 profile: 0 at x only; the first vertex weight is added by the sweep
    hv, _ = K.lattice_sweep(w, h, ex)
    return hv


def lattice_to_point(env: LatticeEnvironment, y: int, t: int, s: int) -> np.ndarray:
    """d((x, s), (y, t)) for every column x (-inf right of y)."""
    i1 = env.col(y)
    w = env.weights[: i1 + 1, s:t + 1][::-1, ::-1]
    h = np.full(w.shape[0], -np.inf)
    h[0] = 0.0
    hv, _ = K.lattice_sweep(np.ascontiguousarray(w.T), h, np.zeros(w.shape[0]))
    out = np.full(env.weights.shape[0], -np.inf)
    out[: i1 + 1] = hv[::-1]
    return out


# ---------------------------------------------------------------- SJ

def sj_lpp(env: SJEnvironment, q) -> int:
    """Maximal number of weight-one horizontal edges on an up-right path."""
    q = _as_query(q)
    i0, i1 = env.col(q.x), env.col(q.y)
    j0, j1 = int(q.s), int(q.t)
    if not (0 <= j0 <= j1 < env.edges.shape[1]):
        raise DomainError("levels outside environment")
    e = env.edges[i0:i1 + 1, j0:j1 + 1].T.astype(float)
    h = np.full(e.shape[1], -np.inf)
    h[0] = 0.0
    hv, _ = K.semi_discrete_sweep(np.ascontiguousarray(e), h, np.zeros(e.shape[1]))
    return int(hv[-1])


# ---------------------------------------------------------------- Poisson lines

def lines_lpp(env: LineField, q) -> int:
    """sup over x = x_{m-1} <= x_m <= ... <= x_n = y of sum F_i(x_{i-1}, x_i]."""
    q = _as_query(q)
    m, n = int(q.s), int(q.t)
    if env.brownian:
        raise ParameterError("use blpp for Brownian fields")
    if not (0 <= m <= n < env.n_levels):
        raise DomainError("levels outside environment")
    lo, hi = env.levels[0].window
    if q.x < lo or q.y > hi:
        raise DomainError("query outside environment window")
    pts, offs = _flatten_levels(env.levels[m:n + 1], q.x, q.y)
    pos, val, _ = K.lines_sweep(np.array([q.x], float), np.array([0], np.int64),
                                 np.array([q.x], float), pts, offs)
    return int(val[np.searchsorted(pos, q.y, "right") - 1])


def _flatten_levels(levels, lo, hi):
    chunks = [p.points[(p.points > lo) & (p.points <= hi)] for p in levels]
    offs = np.zeros(len(chunks) + 1, np.int64)
    offs[1:] = np.cumsum([c.size for c in chunks])
    pts = np.concatenate(chunks) if chunks else np.empty(0)
    return pts.astype(float), offs


def lines_lpp_grid(env: LineField, q) -> int:
    """Reference DP over the union of point locations (quadratic, for small inputs)."""
    q = _as_query(q)
    m, n = int(q.s), int(q.t)
    pts = sorted({q.x, q.y, *[v for lv in env.levels[m:n + 1] for v in lv.points
                             if q.x < v <= q.y]})
    g = np.array(pts)
    prev = np.where(g == q.x, 0.0, -np.inf)
    for lv in env.levels[m:n + 1]:
        F = np.array([lv.count(q.x, v) for v in g])
        run = np.maximum.accumulate(prev - F)
        prev = F + run
    return int(prev[np.searchsorted(g, q.y)])


# ---------------------------------------------------------------- Hammersley

def hammersley_lpp(env: PlanarPointSet, q) -> int:
    """Longest strictly increasing chain in (x, y] x (s, t]."""
    q = _as_query(q)
    m = (env.x > q.x) & (env.x <= q.y) & (env.t > q.s) & (env.t <= q.t)
    if not m.any():
        return 0
    return int(K.lis_ending(env.t[m]).max())


# ---------------------------------------------------------------- Brownian LPP

def blpp(env: LineField, q) -> float:
    """sup over grid breakpoints of sum_i B_i(x_i) - B_i(x_{i-1})."""
    q = _as_query(q)
    if not env.brownian:
        raise ParameterError("blpp needs a Brownian field")
    k0, k1 = env.grid_index(q.x), env.grid_index(q.y)
    m, n = int(q.s), int(q.t)
    if not (0 <= m <= n < env.n_levels):
        raise DomainError("levels outside environment")
    B = env.paths[m:n + 1, k0:k1 + 1]
    d = np.zeros_like(B)
    d[:, 1:] = np.diff(B, axis=1)
    h = np.full(B.shape[1], -np.inf)
    h[0] = 0.0
    hv, _ = K.semi_discrete_sweep(d, h, np.zeros(B.shape[1]))
    return float(hv[-1])


def refine_brownian(env: LineField, stream: RngStream) -> LineField:
    """Halve the grid step by Brownian-bridge midpoints (same underlying paths)."""
    P = env.paths
    mid = 0.5 * (P[:, :-1] + P[:, 1:]) + stream.normal(0.0, np.sqrt(env.delta / 4), P[:, 1:].shape)
    out = np.empty((P.shape[0], 2 * P.shape[1] - 1))
    out[:, ::2] = P
    out[:, 1::2] = mid
    return LineField(paths=out, delta=env.delta / 2, x_lo=env.x_lo)


# ---------------------------------------------------------------- samplers

def sample_lattice(law: str, cols: tuple[int, int], n_levels: int, stream: RngStream,
                   gamma: float = 1.0) -> LatticeEnvironment:
    lo, hi = cols
    shape = (n_levels, hi - lo + 1)
    if law == "exp":
        w = stream.gen.standard_exponential(shape)
    elif law == "geom":
        w = stream.geometric_support0(gamma, shape).astype(float)
    else:
        raise ParameterError(f"unknown lattice law {law!r}")
    return LatticeEnvironment(w.T, law, lo, gamma)


def sample_sj(p: float, cols: tuple[int, int], n_levels: int, stream: RngStream) -> SJEnvironment:
    lo, hi = cols
    e = (stream.random((n_levels, hi - lo + 1)) < p).astype(np.int64)
    return SJEnvironment(e.T, p, lo)


def sample_lines(window: tuple[float, float], n_levels: int, stream: RngStream) -> LineField:
    from .processes import sample_poisson_1d
    return LineField(levels=tuple(sample_poisson_1d(1.0, window, stream) for _ in range(n_levels)))


def sample_brownian(window: tuple[float, float], n_levels: int, delta: float,
                    stream: RngStream) -> LineField:
    """Independent two-sided Brownian motions on the grid x_lo + k*delta, pinned at 0.

    The grid contains 0 when ``window[0]`` is a multiple of ``delta``.
    """
    lo, hi = window
    k_lo = int(np.floor(lo / delta + 1e-9))
    k_hi = int(np.ceil(hi / delta - 1e-9))
    nc = k_hi - k_lo + 1
    inc = stream.normal(0.0, np.sqrt(delta), (n_levels, nc))
    inc[:, 0] = 0.0
    P = np.cumsum(inc, axis=1)
    if k_lo <= 0 <= k_hi:
        P -= P[:, [-k_lo]]
    return LineField(paths=P, delta=delta, x_lo=k_lo * delta)
