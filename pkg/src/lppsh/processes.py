"""Point processes on explicit windows, and monotone couplings across intensities."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rng import RngStream


class ParameterError(ValueError):
    pass


class DomainError(ValueError):
    pass


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointSet:
    """Sorted points in a closed window ``[lo, hi]``.

    As a counting function it is normalized at the origin:
    ``nu(x) = #(0, x]`` for ``x >= 0`` and ``-#(x, 0]`` for ``x < 0``.
    """

    points: np.ndarray
    window: tuple[float, float]

    def __post_init__(self):
        pts = _frozen(self.points).reshape(-1)
        lo, hi = float(self.window[0]), float(self.window[1])
        if hi < lo:
            raise ParameterError(f"empty window [{lo}, {hi}]")
        if pts.size:
            if np.any(np.diff(pts) <= 0):
                raise ParameterError("points must be strictly increasing")
            if pts[0] < lo or pts[-1] > hi:
                raise ParameterError("points outside window")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "window", (lo, hi))

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        return (isinstance(other, PointSet) and self.window == other.window
                and np.array_equal(self.points, other.points))

    def count(self, x: float, y: float) -> int:
        """Number of points in ``(x, y]``."""
        p = self.points
        return int(np.searchsorted(p, y, "right") - np.searchsorted(p, x, "right"))

    def nu(self, x):
        return nu_eval(self, x)

    def restrict(self, lo: float, hi: float) -> "PointSet":
        p = self.points
        return PointSet(p[(p >= lo) & (p <= hi)], (lo, hi))

    def to_json(self) -> str:
        return json.dumps({"window": list(self.window), "points": self.points.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "PointSet":
        d = json.loads(text)
        return cls(np.asarray(d["points"], dtype=float), tuple(d["window"]))

    def to_csv(self) -> str:
        return "x\n" + "".join(f"{v!r}\n" for v in self.points.tolist())

    @classmethod
    def from_csv(cls, text: str, window: tuple[float, float]) -> "PointSet":
        lines = [ln.strip() for ln in text.strip().splitlines()]
        if not lines or lines[0] != "x":
            raise ParameterError("expected header 'x'")
        return cls(np.array([float(v) for v in lines[1:] if v]), window)


def nu_eval(p: PointSet, x):
    """Counting function of ``p`` normalized so that ``nu(0) = 0``."""
    xa = np.asarray(x, dtype=float)
    lo, hi = p.window
    if np.any(xa < lo) or np.any(xa > hi):
        raise DomainError("evaluation point outside window")
    pts = p.points
    out = np.searchsorted(pts, xa, "right") - np.searchsorted(pts, 0.0, "right")
    return int(out) if out.ndim == 0 else out.astype(np.int64)


@dataclass(frozen=True, eq=False)
class PlanarPointSet:
    """Points ``(x, t)`` in a rectangle, stored sorted by ``x``."""

    x: np.ndarray
    t: np.ndarray
    window: tuple[float, float, float, float]  # x_lo, x_hi, t_lo, t_hi

    def __post_init__(self):
        x, t = _frozen(self.x).reshape(-1), _frozen(self.t).reshape(-1)
        if x.shape != t.shape:
            raise ParameterError("x and t lengths differ")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise ParameterError("x coordinates must be strictly increasing")
        if np.unique(t).size != t.size:
            raise ParameterError("t coordinates must be distinct")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "window", tuple(float(v) for v in self.window))

    def __len__(self) -> int:
        return self.x.size

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.t])

    def restrict(self, x_lo, x_hi, t_hi) -> "PlanarPointSet":
        m = (self.x > x_lo) & (self.x <= x_hi) & (self.t <= t_hi)
        return PlanarPointSet(self.x[m], self.t[m], (x_lo, x_hi, self.window[2], t_hi))


def _check_window(lo: float, hi: float) -> None:
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
        raise ParameterError(f"empty or invalid window [{lo}, {hi}]")


def sorted_uniforms(n: int, lo: float, hi: float, stream: RngStream) -> np.ndarray:
    """Order statistics of ``n`` uniforms on ``[lo, hi]`` without sorting.

    Uses normalized exponential spacings, which is linear time.
    """
    if n == 0:
        return np.empty(0)
    e = stream.exponential(1.0, n + 1)
    c = np.cumsum(e)
    return lo + (hi - lo) * (c[:-1] / c[-1])


def sample_poisson_1d(intensity: float, window: Sequence[float], stream: RngStream) -> PointSet:
    lo, hi = float(window[0]), float(window[1])
    if not intensity > 0:
        raise ParameterError("intensity must be positive")
    _check_window(lo, hi)
    n = int(stream.poisson(intensity * (hi - lo)))
    while True:
        pts = sorted_uniforms(n, lo, hi, stream)
        if n < 2 or np.all(np.diff(pts) > 0):
            return PointSet(pts, (lo, hi))


def sample_poisson_2d(intensity: float, window: Sequence[float], stream: RngStream) -> PlanarPointSet:
    """Poisson process of the given rate on ``[x_lo, x_hi] x [t_lo, t_hi]``."""
    x_lo, x_hi, t_lo, t_hi = (float(v) for v in window)
    if not intensity > 0:
        raise ParameterError("intensity must be positive")
    _check_window(x_lo, x_hi)
    _check_window(t_lo, t_hi)
    n = int(stream.poisson(intensity * (x_hi - x_lo) * (t_hi - t_lo)))
    while True:
        x = sorted_uniforms(n, x_lo, x_hi, stream)
        t = stream.uniform(t_lo, t_hi, n)
        # ties have probability zero; resample the whole configuration if they occur
        if n < 2 or (np.all(np.diff(x) > 0) and np.unique(t).size == n):
            return PlanarPointSet(x, t, (x_lo, x_hi, t_lo, t_hi))


@dataclass(frozen=True, eq=False)
class CoupledPointFamily:
    base: PointSet
    marks: np.ndarray
    cap: float

    def __post_init__(self):
        m = _frozen(self.marks).reshape(-1)
        if m.size != len(self.base):
            raise ParameterError("one mark per base point required")
        object.__setattr__(self, "marks", m)


def coupled_family(cap: float, window: Sequence[float], stream: RngStream) -> CoupledPointFamily:
    """Base process of intensity ``exp(cap)`` with uniform marks."""
    base = sample_poisson_1d(float(np.exp(cap)), window, stream)
    return CoupledPointFamily(base, stream.random(len(base)), float(cap))


def couple_intensities(family: CoupledPointFamily, a: float, b: float) -> PointSet:
    """Extract a process of intensity ``e^a`` on ``x < 0`` and ``e^b`` on ``x >= 0``."""
    if a > family.cap or b > family.cap:
        raise ParameterError("parameters exceed the family cap")
    x = family.base.points
    thr = np.where(x < 0, np.exp(a - family.cap), np.exp(b - family.cap))
    return PointSet(x[family.marks <= thr], family.base.window)


@dataclass(frozen=True, eq=False)
class CoupledBernoulliField:
    uniforms: np.ndarray
    lo: int = 0  # site index of uniforms[0]

    def __post_init__(self):
        object.__setattr__(self, "uniforms", _frozen(self.uniforms).reshape(-1))

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.lo, self.lo + self.uniforms.size)


def bernoulli_field(lo: int, hi: int, stream: RngStream) -> CoupledBernoulliField:
    if hi < lo:
        raise ParameterError("empty site range")
    return CoupledBernoulliField(stream.random(hi - lo + 1), int(lo))


def couple_bernoulli(field: CoupledBernoulliField, a, b=None) -> np.ndarray:
    """Site ``i`` is 1 iff ``U_i <= e^a/(1+e^a)``.

    With ``b`` given, sites ``i >= 1`` use ``b`` instead (the two-sided boundary).
    """
    ua = 1.0 / (1.0 + np.exp(-a))
    if b is None:
        thr = ua
    else:
        thr = np.where(field.sites >= 1, 1.0 / (1.0 + np.exp(-b)), ua)
    return (field.uniforms <= thr).astype(np.int64)
