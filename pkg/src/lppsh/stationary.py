"""Stationary boundary data, the height functional and its exit points.

Parameter conventions (one table for all models):

=============  =====================  ==================================
model          parameter ``a``        boundary law
=============  =====================  ==================================
hammersley     log-intensity          Poisson process of intensity e^a
lines          log-intensity, a > 0   Poisson process of intensity e^a
sj             logit, u = e^a/(1+e^a) i.i.d. Ber(u) sites, u > p
exponential    mean beta > 1          i.i.d. Exp increments, mean beta
geometric      mean beta > gamma      i.i.d. Geom increments on {0,1,..}
brownian       drift beta > 0         Brownian increments, unit variance
=============  =====================  ==================================

``mean_to_param`` / ``param_to_mean`` convert between ``a`` and the mean of a
one-unit increment.  Heights are computed on a window ``[lo, hi]`` whose left
end plays the role of minus infinity; an exit point equal to ``lo`` is
reported as boundary-active.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .lpp_core import (LatticeEnvironment, LineField, SJEnvironment, sample_brownian,
                       sample_lattice, sample_lines, sample_sj)
from .processes import (CoupledBernoulliField, CoupledPointFamily, ParameterError, PlanarPointSet,
                        PointSet, couple_bernoulli, couple_intensities, nu_eval,
                        sample_poisson_1d, sample_poisson_2d)
from .queues import QueueResult, queue_cont, queue_disc
from .rng import RngStream

MODELS = ("hammersley", "lines", "sj", "exponential", "geometric", "brownian")
POISSON = ("hammersley", "lines")
GRID = ("sj", "exponential", "geometric", "brownian")


@dataclass(frozen=True)
class ModelSpec:
    """A model together with its environment parameters."""

    name: str
    p: float = 0.3        # SJ edge density
    gamma: float = 1.0    # geometric weight mean
    delta: float = 0.25   # Brownian grid step

    def __post_init__(self):
        if self.name not in MODELS:
            raise ParameterError(f"unknown model {self.name!r}; choose from {MODELS}")
        if not 0 < self.p < 1:
            raise ParameterError("SJ needs 0 < p < 1")
        if not self.gamma > 0 or not self.delta > 0:
            raise ParameterError("gamma and delta must be positive")

    @property
    def step(self) -> float:
        """Spacing of admissible starting points (0 for continuum models)."""
        if self.name in POISSON:
            return 0.0
        return self.delta if self.name == "brownian" else 1.0


def as_spec(model) -> ModelSpec:
    return model if isinstance(model, ModelSpec) else ModelSpec(str(model))


def param_to_mean(model, a: float) -> float:
    m = as_spec(model)
    if m.name in POISSON:
        return float(np.exp(a))
    if m.name == "sj":
        return float(1.0 / (1.0 + np.exp(-a)))
    return float(a)


def mean_to_param(model, beta: float) -> float:
    m = as_spec(model)
    if m.name in POISSON:
        return float(np.log(beta))
    if m.name == "sj":
        return float(np.log(beta / (1.0 - beta)))
    return float(beta)


def check_admissible(model, a: float) -> None:
    """Raise naming the violated constraint when ``a`` is outside the stationary range."""
    m = as_spec(model)
    if not np.isfinite(a):
        raise ParameterError("parameter must be finite")
    if m.name == "lines" and not a > 0:
        raise ParameterError("lines boundary needs a > 0 (intensity e^a > 1)")
    if m.name == "sj" and not 1.0 / (1.0 + np.exp(-a)) > m.p:
        raise ParameterError(f"SJ boundary needs e^a/(1+e^a) > p = {m.p}")
    if m.name == "exponential" and not a > 1:
        raise ParameterError("exponential boundary needs mean beta > 1")
    if m.name == "geometric" and not a > m.gamma:
        raise ParameterError(f"geometric boundary needs mean beta > gamma = {m.gamma}")
    if m.name == "brownian" and not a > 0:
        raise ParameterError("Brownian boundary needs drift beta > 0")


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Initial profile ``f`` with ``f(0) = 0``.

    Poisson models store a PointSet; grid models store per-site increments
    ``increments[k] = f(x_k) - f(x_{k-1})`` on ``x_k = lo + k*step``
    (``increments[0]`` is unused and zero).
    """

    model: ModelSpec
    a: float
    b: float
    window: tuple[float, float]
    points: PointSet | None = None
    increments: np.ndarray | None = None

    @property
    def grid(self) -> np.ndarray:
        n = self.increments.size
        return self.window[0] + self.model.step * np.arange(n)

    @property
    def values(self) -> np.ndarray:
        """f on the grid (grid models) or at [lo] + points (Poisson models)."""
        if self.points is not None:
            c = np.concatenate([[self.window[0]], self.points.points])
            return nu_eval(self.points, c).astype(float)
        v = np.cumsum(self.increments).astype(float)
        k0 = int(round(-self.window[0] / self.model.step))
        return v - v[k0]

    @property
    def candidates(self) -> np.ndarray:
        """Admissible starting points for the variational problem."""
        if self.points is not None:
            return np.concatenate([[self.window[0]], self.points.points])
        return self.grid

    def f(self, x):
        x = np.asarray(x, dtype=float)
        if self.points is not None:
            return nu_eval(self.points, x)
        k = np.floor((x - self.window[0]) / self.model.step + 1e-9).astype(int)
        if np.any(k < 0) or np.any(k >= self.increments.size):
            raise ParameterError("evaluation outside boundary window")
        return self.values[k]


def _grid_window(m: ModelSpec, window) -> tuple[float, float, int]:
    lo, hi = float(window[0]), float(window[1])
    st = m.step
    k_lo = int(np.floor(lo / st + 1e-9))
    k_hi = int(np.ceil(hi / st - 1e-9))
    if k_lo > 0 or k_hi < 0:
        raise ParameterError("boundary window must contain 0")
    return k_lo * st, k_hi * st, k_hi - k_lo + 1


def sample_boundary(model, a: float, window, stream: RngStream, b: float | None = None) -> BoundaryData:
    """Stationary boundary with parameter ``a`` left of 0 and ``b`` (default a) right of 0."""
    m = as_spec(model)
    b = a if b is None else b
    check_admissible(m, a)
    check_admissible(m, b)
    lo, hi = float(window[0]), float(window[1])
    if m.name in POISSON:
        if lo > 0 or hi < 0:
            raise ParameterError("boundary window must contain 0")
        left = sample_poisson_1d(np.exp(a), (lo, 0.0), stream).points if lo < 0 else np.empty(0)
        right = sample_poisson_1d(np.exp(b), (0.0, hi), stream).points
        left = left[left < 0]
        return BoundaryData(m, a, b, (lo, hi), points=PointSet(np.concatenate([left, right]), (lo, hi)))
    lo, hi, n = _grid_window(m, window)
    x = lo + m.step * np.arange(n)
    right = x > 0  # increment k covers (x_{k-1}, x_k]
    inc = np.empty(n)
    nl, nr = int((~right).sum()), int(right.sum())
    inc[~right] = _increments(m, a, nl, stream)
    inc[right] = _increments(m, b, nr, stream)
    inc[0] = 0.0
    return BoundaryData(m, a, b, (lo, hi), increments=inc)


def _increments(m: ModelSpec, a: float, n: int, stream: RngStream) -> np.ndarray:
    if n == 0:
        return np.empty(0)
    if m.name == "sj":
        return (stream.random(n) < 1.0 / (1.0 + np.exp(-a))).astype(float)
    if m.name == "exponential":
        return stream.exponential(a, n)
    if m.name == "geometric":
        return stream.geometric_support0(a, n).astype(float)
    return a * m.delta + stream.normal(0.0, np.sqrt(m.delta), n)


def boundary_from_family(family: CoupledPointFamily, model, a: float, b: float) -> BoundaryData:
    """Poisson boundary extracted from a coupled family at parameters (a, b)."""
    m = as_spec(model)
    return BoundaryData(m, a, b, family.base.window, points=couple_intensities(family, a, b))


def boundary_from_field(field: CoupledBernoulliField, model, a: float, b: float) -> BoundaryData:
    """SJ boundary extracted from a coupled uniform field (sites ``lo..``)."""
    m = as_spec(model)
    inc = couple_bernoulli(field, a, b).astype(float)
    inc[0] = 0.0
    lo = field.lo
    return BoundaryData(m, a, b, (float(lo), float(lo + inc.size - 1)), increments=inc)


# ---------------------------------------------------------------- environments

def sample_environment(model, window, level: float, stream: RngStream):
    """Environment on ``window`` up to time/level ``level`` (levels 0..level)."""
    m = as_spec(model)
    lo, hi = float(window[0]), float(window[1])
    if m.name == "hammersley":
        return sample_poisson_2d(1.0, (lo, hi, 0.0, float(level)), stream)
    n = int(level) + 1
    if m.name == "lines":
        return sample_lines((lo, hi), n, stream)
    if m.name == "brownian":
        glo, ghi, _ = _grid_window(m, (lo, hi))
        return sample_brownian((glo, ghi), n, m.delta, stream)
    glo, ghi, _ = _grid_window(m, (lo, hi))
    if m.name == "sj":
        return sample_sj(m.p, (int(glo), int(ghi)), n, stream)
    return sample_lattice("exp" if m.name == "exponential" else "geom", (int(glo), int(ghi)), n,
                          stream, m.gamma)


# ---------------------------------------------------------------- heights

@dataclass(frozen=True)
class HeightProfile:
    y: np.ndarray
    h: np.ndarray
    Z: np.ndarray | None
    W: float
    boundary_active: np.ndarray | None = None

    @property
    def any_boundary_active(self) -> bool:
        return bool(self.boundary_active is not None and self.boundary_active.any())

    def to_csv(self) -> str:
        rows = ["y,h,Z,boundary_active"]
        Z = self.Z if self.Z is not None else np.full(self.y.size, np.nan)
        ba = self.boundary_active if self.boundary_active is not None else np.zeros(self.y.size, bool)
        for y, h, z, b in zip(self.y, self.h, Z, ba):
            rows.append(f"{y!r},{h!r},{z!r},{int(b)}")
        return "\n".join(rows) + "\n"


def _snap(f: BoundaryData, ys) -> np.ndarray:
    st = f.model.step
    lo = f.window[0]
    k = np.floor((np.asarray(ys, float) - lo) / st + 1e-9).astype(np.int64)
    if np.any(k < 0) or np.any(k >= f.increments.size):
        raise ParameterError("query outside window")
    return k


def height(env, f: BoundaryData, level: float, ys, exits: bool = True) -> HeightProfile:
    """h(level, y; f) = sup_{lo <= x <= y} f(x) + d(x, 0; y, level) with rightmost exits."""
    m = f.model
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    lo, hi = f.window
    if np.any(ys < lo) or np.any(ys > hi):
        raise ParameterError("queries must lie inside the boundary window")
    if m.name == "hammersley":
        return _height_hammersley(env, f, float(level), ys, exits)
    if m.name == "lines":
        pos, val, ex = _lines_final(env, f, int(level))
        i = np.searchsorted(pos, ys, "right") - 1
        Z = ex[i]
        return HeightProfile(ys, val[i].astype(float), Z, -lo, Z == lo)
    k = _snap(f, ys)
    hv, ev = _grid_sweep(env, f, int(level))
    Z = ev[k]
    return HeightProfile(ys, hv[k], Z, -lo, Z == lo)


def exit_point(env, f: BoundaryData, level: float, ys) -> np.ndarray:
    return height(env, f, level, ys, exits=True).Z


def _height_hammersley(env: PlanarPointSet, f: BoundaryData, T: float, ys, exits: bool):
    lo, hi = f.window
    bx = f.points.points
    bx = bx[bx > lo]
    keep = (env.x > lo) & (env.x <= hi) & (env.t > 0) & (env.t <= T)
    ex, et = env.x[keep], env.t[keep]
    if not exits or ys.size > 8:
        order = np.argsort(ys, kind="stable")
        piles = np.empty(ys.size, np.int64)
        piles[order] = K.hammersley_profile(bx, ex, et, ys[order])
        h = nu_eval(f.points, lo) + piles
        if not exits:
            return HeightProfile(ys, h.astype(float), None, -lo)
    else:
        h = None  # a few queries: the exit sweep yields the height too
    cand = np.concatenate([[lo], bx])
    cval = nu_eval(f.points, cand).astype(np.int64)
    Z = np.empty(ys.size)
    hv = np.empty(ys.size, np.int64)
    for j, y in enumerate(ys):
        hv[j], arg = K.hammersley_exit(cand, cval, ex, et, y, T)
        Z[j] = cand[arg]
    if h is not None:
        assert np.array_equal(hv, h)
    h = hv
    return HeightProfile(ys, h.astype(float), Z, -lo, Z == lo)


def _lines_initial(f: BoundaryData):
    lo = f.window[0]
    pts = f.points.points
    pos = np.concatenate([[lo], pts[pts > lo]])
    return pos, nu_eval(f.points, pos).astype(np.int64), pos.copy()


def _lines_final(env: LineField, f: BoundaryData, n: int):
    lo, hi = f.window
    if env.levels[0].window[0] > lo or env.levels[0].window[1] < hi:
        raise ParameterError("environment window must cover the boundary window")
    chunks = [lv.points[(lv.points > lo) & (lv.points <= hi)] for lv in env.levels[: n + 1]]
    offs = np.zeros(len(chunks) + 1, np.int64)
    offs[1:] = np.cumsum([c.size for c in chunks])
    pts = np.concatenate(chunks).astype(float)
    return K.lines_sweep(*_lines_initial(f), pts, offs)


def _grid_sweep(env, f: BoundaryData, n: int):
    m = f.model
    h0 = f.values
    ex0 = f.grid
    ncol = h0.size
    if m.name == "brownian":
        k0 = int(round((f.window[0] - env.x_lo) / env.delta))
        if k0 < 0 or k0 + ncol > env.paths.shape[1] or not np.isclose(env.delta, m.delta):
            raise ParameterError("Brownian field does not cover the boundary grid")
        P = env.paths[: n + 1, k0:k0 + ncol]
        d = np.zeros_like(P)
        d[:, 1:] = np.diff(P, axis=1)
        return K.semi_discrete_sweep(d, h0, ex0)
    k0 = int(f.window[0]) - env.x_lo
    arr = env.edges if m.name == "sj" else env.weights
    if k0 < 0 or k0 + ncol > arr.shape[0] or arr.shape[1] < n + 1:
        raise ParameterError("environment does not cover the boundary window")
    w = np.ascontiguousarray(arr[k0:k0 + ncol, : n + 1].T, dtype=float)
    if m.name == "sj":
        return K.semi_discrete_sweep(w, h0, ex0)
    return K.lattice_sweep(w, h0, ex0)


# ---------------------------------------------------------------- line evolution

def evolve_lines(f: BoundaryData, level: PointSet) -> tuple[BoundaryData, QueueResult]:
    """One level of the lines dynamics: new boundary R(F, f), height gain Q(F, f)."""
    if f.model.name != "lines":
        raise ParameterError("evolve_lines needs a lines boundary")
    lo, hi = f.window
    F = level.restrict(lo, hi) if level.window != (lo, hi) else level
    res = queue_cont(F, f.points, (lo, hi))
    new = res.recycled()
    pts = new.points[new.points > lo]
    return BoundaryData(f.model, f.a, f.b, (lo, hi), points=PointSet(pts, (lo, hi))), res


def evolve_sj(f: BoundaryData, row) -> tuple[BoundaryData, np.ndarray]:
    """One level of the SJ dynamics: new increments R(t, I), height gain J = Q(t, I)."""
    if f.model.name != "sj":
        raise ParameterError("evolve_sj needs an SJ boundary")
    row = np.asarray(row, dtype=np.int64)
    if row.size != f.increments.size:
        raise ParameterError("edge row must cover the boundary sites")
    res = queue_disc(row[1:], f.increments[1:].astype(np.int64))
    inc = np.concatenate([[0.0], res.r.astype(float)])
    J = np.concatenate([[0], res.q])
    return BoundaryData(f.model, f.a, f.b, f.window, increments=inc), J


def iterate_height(env, f: BoundaryData, n: int, ys) -> np.ndarray:
    """Height after levels 0..n obtained by iterating the queue maps."""
    ys = np.atleast_1d(np.asarray(ys, float))
    h = f.f(ys).astype(float)
    cur = f
    for i in range(n + 1):
        if f.model.name == "lines":
            cur, res = evolve_lines(cur, env.levels[i])
            h += res.Q(ys)
        else:
            k0 = int(f.window[0]) - env.x_lo
            row = env.edges[k0:k0 + f.increments.size, i]
            cur, J = evolve_sj(cur, row)
            h += J[_snap(f, ys)]
    return h


# ---------------------------------------------------------------- fluid process

@dataclass(frozen=True)
class FluidState:
    initial: PointSet
    positions: PointSet
    t: float
    ev_x: np.ndarray          # event locations in time order
    ev_t: np.ndarray
    moved: np.ndarray         # particle index pulled by each event (-1: underflow)
    underflow: bool
    ys: np.ndarray = field(default_factory=lambda: np.empty(0))
    crossings: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))

    def eta(self, y: float) -> int:
        """Number of trajectory crossings of {y} x (0, t]."""
        j = np.flatnonzero(self.ys == y)
        if j.size:
            return int(self.crossings[j[0]])
        return int(K.fluid_run(self.initial.points, self.ev_x, self.ev_t, np.array([y]))[1][0])

    def underflow_at_or_left_of(self, y: float) -> bool:
        """An event at x <= y found no particle to its right (crossings at y unreliable)."""
        return bool(np.any((self.moved < 0) & (self.ev_x <= y)))

    def trajectories(self) -> list[list[tuple[float, float]]]:
        """Up-left polylines (x, t) for each particle, starting on the x-axis."""
        pos = self.initial.points.copy()
        paths = [[(float(x), 0.0)] for x in pos]
        for x0, t0, i in zip(self.ev_x, self.ev_t, self.moved):
            if i < 0:
                continue
            paths[i].append((float(pos[i]), float(t0)))
            paths[i].append((float(x0), float(t0)))
            pos[i] = x0
        for i, p in enumerate(paths):
            p.append((float(pos[i]), float(self.t)))
        return paths

    def order_preserved(self) -> bool:
        """Replay events checking that particle order never changes."""
        pos = self.initial.points.copy()
        for x0, i in zip(self.ev_x, self.moved):
            if i < 0:
                continue
            if i > 0 and not pos[i - 1] < x0:
                return False
            pos[i] = x0
        return bool(np.all(np.diff(pos) > 0))


def fluid_evolve(nu: PointSet, X: PlanarPointSet, t: float, ys=()) -> FluidState:
    """Run the Hammersley fluid from particles at the points of ``nu`` up to time ``t``."""
    lo, hi = nu.window
    keep = (X.x > lo) & (X.x <= hi) & (X.t > 0) & (X.t <= t)
    order = np.argsort(X.t[keep], kind="stable")
    ex, et = X.x[keep][order], X.t[keep][order]
    ys = np.asarray(ys, float)
    pos, cross, moved, under = K.fluid_run(nu.points.astype(float), ex, et, ys)
    return FluidState(nu, PointSet(pos, (lo, hi)), float(t), ex, et, moved, bool(under), ys, cross)


@dataclass(frozen=True)
class EtaCheck:
    ok: bool
    conclusive: bool
    h: int
    nu_y: int
    eta: int


def eta_identity_check(fluid: FluidState, X: PlanarPointSet, y: float) -> EtaCheck:
    """Compare the LIS height with nu(y) + eta_y(t) for the boundary ``fluid.initial``."""
    nu = fluid.initial
    f = BoundaryData(ModelSpec("hammersley"), 0.0, 0.0, nu.window, points=nu)
    hp = height(X, f, fluid.t, [y], exits=True)
    h = int(hp.h[0])
    nu_y = nu_eval(nu, y)
    eta = fluid.eta(y)
    conclusive = not fluid.underflow_at_or_left_of(y) and not bool(hp.boundary_active[0])
    return EtaCheck(h == nu_y + eta, conclusive, h, nu_y, eta)
