"""Covering-space model of the Mobius band M = (R x I)/<tau>.

Points of M are stored through their canonical lift in the fundamental
domain [-1/2, 1/2) x [-1/2, 1/2]. The branch cut is the image of the
vertical line x = 1/2 (equivalently x = -1/2).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

HALF = 0.5
POINT_TOL = 1e-9
_Y_SLACK = 1e-12


@dataclass(frozen=True)
class CoverPoint:
    x: float
    y: float

    def __post_init__(self):
        if abs(self.y) > HALF + _Y_SLACK:
            raise DomainError(f"cover point y={self.y} outside [-1/2, 1/2]")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True, eq=False)
class BandPoint:
    """A point of M, represented by its canonical lift."""

    lift: CoverPoint

    @property
    def x(self) -> float:
        return self.lift.x

    @property
    def y(self) -> float:
        return self.lift.y

    def __eq__(self, other):
        if not isinstance(other, BandPoint):
            return NotImplemented
        return distance(self, other) <= POINT_TOL

    __hash__ = None

    def __repr__(self):
        return f"BandPoint({self.x:.12g}, {self.y:.12g})"

    def in_chart_interior(self) -> bool:
        """True when the point lies in the open disk M-hat (off the cut)."""
        return -HALF < self.x < HALF


def band_point(x: float, y: float) -> BandPoint:
    """Shorthand for project(CoverPoint(x, y))."""
    return project(CoverPoint(x, y))


def tau(p: CoverPoint) -> CoverPoint:
    return CoverPoint(p.x + 1.0, -p.y)


def tau_inv(p: CoverPoint) -> CoverPoint:
    return CoverPoint(p.x - 1.0, -p.y)


def tau_power(p: CoverPoint, n: int) -> CoverPoint:
    return CoverPoint(p.x + n, -p.y if n % 2 else p.y)


def deck_index(x):
    """The n with x - n in [-1/2, 1/2); works on scalars and arrays."""
    return np.floor(np.asarray(x, dtype=float) + HALF).astype(int)


def canonicalize(x, y):
    """Vectorised projection: returns canonical (x, y) and the deck index n."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = deck_index(x)
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    return x - n, sign * y, n


def apply_deck(x, y, n):
    """Apply tau^n to cover coordinates (vectorised)."""
    n = np.asarray(n)
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    return np.asarray(x) + n, sign * np.asarray(y)


def project(p: CoverPoint) -> BandPoint:
    if abs(p.y) > HALF + _Y_SLACK:
        raise DomainError(f"y={p.y} outside [-1/2, 1/2]")
    n = math.floor(p.x + HALF)
    x = p.x - n
    y = -p.y if n % 2 else p.y
    if x >= HALF:  # guard against round-off at the right edge
        x -= 1.0
        y = -y
    return BandPoint(CoverPoint(x, y))


def distance(p: BandPoint, q: BandPoint, window: int = 1) -> float:
    """Flat distance in M: minimum over deck shifts |n| <= window."""
    best = math.inf
    for n in range(-window, window + 1):
        qn = tau_power(q.lift, n)
        best = min(best, math.hypot(p.x - qn.x, p.y - qn.y))
    return best


def distance_arrays(x1, y1, x2, y2, window: int = 1):
    """Vectorised distance between canonical lifts."""
    best = None
    for n in range(-window, window + 1):
        xs, ys = apply_deck(x2, y2, n)
        d = np.hypot(np.asarray(x1) - xs, np.asarray(y1) - ys)
        best = d if best is None else np.minimum(best, d)
    return best


def nearest_lift(anchor: CoverPoint, q: BandPoint, window: int = 1) -> CoverPoint:
    """The lift of q closest to an arbitrary cover point."""
    n0 = math.floor(anchor.x + HALF)
    best, best_d = None, math.inf
    for n in range(n0 - window, n0 + window + 1):
        qn = tau_power(q.lift, n)
        d = math.hypot(anchor.x - qn.x, anchor.y - qn.y)
        if d < best_d:
            best, best_d = qn, d
    return best


# ---------------------------------------------------------------------------
# geodesic legs

@dataclass(frozen=True)
class GeodesicLeg:
    start: BandPoint
    end: BandPoint
    variant: str
    cover_segment: tuple

    def point_at(self, t: float) -> CoverPoint:
        a, b = self.cover_segment
        return CoverPoint(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))

    def length(self) -> float:
        a, b = self.cover_segment
        return math.hypot(b.x - a.x, b.y - a.y)

    def samples(self, n: int = 33) -> np.ndarray:
        a, b = self.cover_segment
        t = np.linspace(0.0, 1.0, n)
        return np.stack([a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)], axis=1)


def geodesic_interior(x: BandPoint, y: BandPoint) -> GeodesicLeg:
    if not (x.in_chart_interior() and y.in_chart_interior()):
        raise DomainError("interior geodesic needs both endpoints off the branch cut")
    return GeodesicLeg(x, y, "interior", (x.lift, y.lift))


def geodesic_to_branch(z: BandPoint, q_y: float, sign: int) -> GeodesicLeg:
    """Leg from z to the branch point pi(1/2, q_y), approached from the given side.

    sign=+1 ends at (1/2, q_y); sign=-1 ends at (-1/2, -q_y).
    """
    if not z.in_chart_interior():
        raise DomainError("branch leg must start off the branch cut")
    if abs(q_y) > HALF:
        raise DomainError(f"|q_y|={abs(q_y)} exceeds 1/2")
    if sign > 0:
        end = CoverPoint(HALF, q_y)
        variant = "to-branch-plus"
    else:
        end = CoverPoint(-HALF, -q_y)
        variant = "to-branch-minus"
    return GeodesicLeg(z, project(end), variant, (z.lift, end))


def _segment_min_distance(a0, a1, b0, b1) -> float:
    # relative position d(t) = (a0-b0) + t*((a1-a0)-(b1-b0)) is affine in t
    d0 = np.asarray(a0, float) - np.asarray(b0, float)
    dv = (np.asarray(a1, float) - np.asarray(a0, float)) - (np.asarray(b1, float) - np.asarray(b0, float))
    vv = float(dv @ dv)
    t = 0.0 if vv == 0.0 else min(1.0, max(0.0, -float(d0 @ dv) / vv))
    return float(np.hypot(*(d0 + t * dv)))


def min_distance_simultaneous(leg1: GeodesicLeg, leg2: GeodesicLeg) -> float:
    """min over t of the M-distance between leg1(t) and leg2(t)."""
    a0, a1 = (p.as_array() for p in leg1.cover_segment)
    best = math.inf
    for n in (-1, 0, 1):
        b0, b1 = (tau_power(p, n).as_array() for p in leg2.cover_segment)
        best = min(best, _segment_min_distance(a0, a1, b0, b1))
    return best


# ---------------------------------------------------------------------------
# region decomposition

@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains(self, x, y):
        return (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)

    def corners(self):
        return [(self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1)]


@dataclass(frozen=True)
class Cell:
    """A junction or strip of N; may consist of several chart pieces."""

    name: str
    kind: str  # "junction" or "strip"
    pieces: tuple
    leaf: str | None = None  # leaf direction for strips

    @property
    def area(self) -> float:
        return sum(r.area for r in self.pieces)

    def contains(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        out = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for r in self.pieces:
            out |= r.contains(x, y)
        return out


@dataclass(frozen=True)
class RegionDecomposition:
    a1: float
    a2: float
    eps: float
    a1_star: float
    a2_star: float
    dividing_line_x: float
    V1: Rect
    V2: Rect
    junctions: tuple
    strips: tuple
    adjacency: dict = field(hash=False, compare=False)

    @property
    def area_N(self) -> float:
        return sum(c.area for c in self.junctions) + sum(c.area for c in self.strips)

    def cells(self):
        return list(self.junctions) + list(self.strips)

    def locate(self, x: float, y: float) -> str:
        """Name of the region containing a canonical point (V1, V2 or a cell)."""
        if self.V1.contains(x, y):
            return "V1"
        if self.V2.contains(x, y):
            return "V2"
        for c in self.cells():
            if c.contains(x, y):
                return c.name
        raise DomainError(f"point ({x}, {y}) not located")

    def to_text(self) -> str:
        doc = {
            "a1": self.a1, "a2": self.a2, "eps": self.eps,
            "a1_star": self.a1_star, "dividing_line_x": self.dividing_line_x,
            "V1": self.V1.corners(), "V2": self.V2.corners(),
            "junctions": {c.name: [r.corners() for r in c.pieces] for c in self.junctions},
            "strips": {c.name: {"leaf": c.leaf, "pieces": [r.corners() for r in c.pieces]}
                       for c in self.strips},
            "adjacency": {k: sorted(v) for k, v in self.adjacency.items()},
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def region_decomposition(a1: float, a2: float, eps: float) -> RegionDecomposition:
    if a1 <= 0 or a2 <= 0 or a1 + a2 > 1.0 + 1e-15:
        raise ConfigurationError(f"need a1, a2 > 0 and a1 + a2 <= 1 (got {a1}, {a2})")
    s1 = a1 / (a1 + a2)
    s2 = 1.0 - s1
    if not (0 < eps < min(s1, s2) / 4):
        raise ConfigurationError(f"eps={eps} must lie in (0, {min(s1, s2) / 4})")
    h, e = HALF, eps
    px = -h + s1
    V1 = Rect(-h + e, px - e, -h + e, h - e)
    V2 = Rect(px + e, h - e, -h + e, h - e)
    top, bot = (h - e, h), (-h, -h + e)
    mid = (-h + e, h - e)
    junctions = (
        Cell("J_div_top", "junction", (Rect(px - e, px + e, *top),)),
        Cell("J_div_bottom", "junction", (Rect(px - e, px + e, *bot),)),
        # corner junctions glue across the cut: (1/2, 1/2) ~ (-1/2, -1/2)
        Cell("J_cut_a", "junction", (Rect(h - e, h, *top), Rect(-h, -h + e, *bot))),
        Cell("J_cut_b", "junction", (Rect(h - e, h, *bot), Rect(-h, -h + e, *top))),
    )
    strips = (
        Cell("S_top_left", "strip", (Rect(-h + e, px - e, *top),), "vertical"),
        Cell("S_top_right", "strip", (Rect(px + e, h - e, *top),), "vertical"),
        Cell("S_bottom_left", "strip", (Rect(-h + e, px - e, *bot),), "vertical"),
        Cell("S_bottom_right", "strip", (Rect(px + e, h - e, *bot),), "vertical"),
        Cell("S_cut", "strip", (Rect(h - e, h, *mid), Rect(-h, -h + e, *mid)), "horizontal"),
        Cell("S_div", "strip", (Rect(px - e, px + e, *mid),), "horizontal"),
    )
    adjacency = _adjacency(junctions, strips)
    return RegionDecomposition(a1, a2, eps, s1, s2, px, V1, V2, junctions, strips, adjacency)


def _pieces_touch(r: Rect, s: Rect, tol=1e-12) -> bool:
    """Shared edge of positive length, directly or through the cut gluing."""
    candidates = [s]
    # gluing x = 1/2 edge to x = -1/2 edge with y -> -y
    if abs(s.x0 + HALF) < tol:
        candidates.append(Rect(s.x0 + 1, s.x1 + 1, -s.y1, -s.y0))
    if abs(s.x1 - HALF) < tol:
        candidates.append(Rect(s.x0 - 1, s.x1 - 1, -s.y1, -s.y0))
    for c in candidates:
        ox = min(r.x1, c.x1) - max(r.x0, c.x0)
        oy = min(r.y1, c.y1) - max(r.y0, c.y0)
        if (abs(ox) < tol and oy > tol) or (abs(oy) < tol and ox > tol):
            return True
    return False


def _adjacency(junctions, strips) -> dict:
    adj = {}
    for j in junctions:
        adj[j.name] = {s.name for s in strips
                       if any(_pieces_touch(p, q) for p in j.pieces for q in s.pieces)}
    return adj


def count_components(mask, closed: bool = True) -> int:
    """Number of maximal runs of True in a sampled boolean sequence."""
    m = np.asarray(mask, dtype=bool)
    if m.size == 0 or not m.any():
        return 0
    if m.all():
        return 1
    starts = int(np.count_nonzero(m[1:] & ~m[:-1]))
    if closed:
        starts += int(m[0] and not m[-1])
    else:
        starts += int(m[0])
    return starts
