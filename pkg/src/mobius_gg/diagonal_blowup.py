"""Blow-up of the diagonal of M x M and the induced action of C^1 maps.

Tangent vectors at a point p are written in the canonical chart at p. The
deck transformation flips y, so a differential computed on cover lifts is
turned into a chart differential by multiplying with diag(1, (-1)^n).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .band_geometry import HALF, BandPoint, CoverPoint, band_point, distance, nearest_lift
from .errors import DomainError
from .isotopy_engine import Isotopy

INJECTIVITY_RADIUS = 0.5
DEFAULT_EPS = 0.25
FULL_PLANE = "full-plane"


def injectivity_radius() -> float:
    return INJECTIVITY_RADIUS


def translates_disjoint(center, r: float, max_shift: int = 3) -> bool:
    """True when the open r-disk about a cover point misses all its deck translates."""
    x, y = center
    for n in range(1, max_shift + 1):
        cx, cy = x + n, y * (-1) ** n
        if math.hypot(cx - x, cy - y) < 2 * r:
            return False
    return True


@dataclass(frozen=True)
class HalfPlane:
    """{v : sign * v_y <= offset}."""

    sign: int
    offset: float

    def contains(self, v, tol: float = 1e-12) -> bool:
        return self.sign * float(v[1]) <= self.offset + tol

    def through_origin(self) -> bool:
        return abs(self.offset) < 1e-12


def defining_half_plane(p: BandPoint):
    """Half-plane of admissible tangent vectors, or FULL_PLANE on the core."""
    if p.y > 0:
        return HalfPlane(1, HALF - p.y)
    if p.y < 0:
        return HalfPlane(-1, HALF + p.y)
    return FULL_PLANE


def exp_map(p: BandPoint, v, r_cap: float = INJECTIVITY_RADIUS) -> BandPoint:
    """Straight-line exponential in the cover, projected to M."""
    v = np.asarray(v, float)
    if r_cap > INJECTIVITY_RADIUS:
        raise DomainError("radius cap exceeds the injectivity radius")
    if math.hypot(*v) >= r_cap:
        raise DomainError(f"|v| = {math.hypot(*v):g} is not below {r_cap:g}")
    H = defining_half_plane(p)
    if H is not FULL_PLANE and not H.contains(v):
        raise DomainError("tangent vector points out of the band")
    return band_point(p.x + float(v[0]), p.y + float(v[1]))


def log_map(p: BandPoint, q: BandPoint) -> np.ndarray:
    """exp_p^-1(q) for d(p, q) below the injectivity radius."""
    if distance(p, q) >= INJECTIVITY_RADIUS:
        raise DomainError("points are not within the injectivity radius")
    ql = nearest_lift(p.lift, q)
    return np.array([ql.x - p.x, ql.y - p.y])


@dataclass(frozen=True)
class BlowupPoint:
    p: BandPoint
    q: BandPoint
    ray: tuple  # unit vector in the chart at p

    @property
    def on_diagonal(self) -> bool:
        return self.p == self.q


def blowup_point(p: BandPoint, q: BandPoint, ray=None) -> BlowupPoint:
    """Off the diagonal the ray is forced; on it, ``ray`` is required."""
    if p == q:
        if ray is None:
            raise DomainError("a diagonal point needs a ray direction")
        r = np.asarray(ray, float)
    else:
        r = log_map(p, q)
    nr = math.hypot(*r)
    if nr == 0:
        raise DomainError("zero ray")
    return BlowupPoint(p, q, (float(r[0] / nr), float(r[1] / nr)))


def blowup_embed(pt: BlowupPoint, eps: float = DEFAULT_EPS) -> np.ndarray:
    """e^{d(p,q)} times the unit ray, a vector in T_pM of norm in [1, e^eps]."""
    if not 0 < eps < INJECTIVITY_RADIUS:
        raise DomainError("eps must lie in (0, 1/2)")
    d = 0.0 if pt.on_diagonal else distance(pt.p, pt.q)
    if d > eps + 1e-12:
        raise DomainError(f"d(p, q) = {d:g} exceeds eps = {eps:g}")
    return math.exp(d) * np.asarray(pt.ray)


def _image(f: Isotopy, p: BandPoint):
    X, Y = f.lift_map(1.0, np.array([p.x]), np.array([p.y]))
    return CoverPoint(float(X[0]), float(np.clip(Y[0], -HALF, HALF)))


def chart_differential(f: Isotopy, p: BandPoint) -> np.ndarray:
    """Differential of the time-1 map from the chart at p to the chart at f(p)."""
    J = np.asarray(f.lift_jacobian(1.0, np.array([p.x]), np.array([p.y]))[0], float)
    img = _image(f, p)
    n = math.floor(img.x + HALF)
    return np.diag([1.0, (-1.0) ** n]) @ J


def extend_action(f: Isotopy, pt: BlowupPoint) -> BlowupPoint:
    """Action of the time-1 map of f on the blown-up configuration space."""
    fp = band_point(*_coords(_image(f, pt.p)))
    if not pt.on_diagonal:
        fq = band_point(*_coords(_image(f, pt.q)))
        return blowup_point(fp, fq)
    D = chart_differential(f, pt.p)
    if abs(np.linalg.det(D)) < 1e-12:
        raise RuntimeError("singular differential")
    v = D @ np.asarray(pt.ray)
    return BlowupPoint(fp, fp, (float(v[0] / math.hypot(*v)), float(v[1] / math.hypot(*v))))


def _coords(c: CoverPoint):
    return c.x, c.y


def ray_distance(a: BlowupPoint, b: BlowupPoint) -> float:
    """Distance of two blow-up points: base points plus unit rays."""
    return max(distance(a.p, b.p), distance(a.q, b.q),
               math.hypot(a.ray[0] - b.ray[0], a.ray[1] - b.ray[1]))


def continuity_probe(f: Isotopy, p: BandPoint, u, steps=(1e-4, 1e-5, 1e-6, 1e-7)) -> dict:
    """Compare the action on pairs (p, exp_p(s u)) with the action on (p, p, u).

    The pair ray differs from its limit by O(s), and steps much below the
    point tolerance collapse onto the diagonal, so the limit of the sequence
    is estimated by Richardson extrapolation at the smallest step.
    """
    u = np.asarray(u, float) / math.hypot(*u)
    limit = np.array(extend_action(f, blowup_point(p, p, u)).ray)

    def ray(s):
        return np.array(extend_action(f, blowup_point(p, exp_map(p, s * u))).ray)

    errors = [float(np.linalg.norm(ray(s) - limit)) for s in steps]
    s = steps[-1]
    extrapolated = 2.0 * ray(s / 2.0) - ray(s)
    return {"steps": list(steps), "errors": errors,
            "limit_error": float(np.linalg.norm(extrapolated - limit))}
