"""Explicit density-preserving isotopies of the Mobius band.

Every isotopy works on lifts: ``lift_map(t, x, y)`` sends cover points to
cover points, continues the identity at t = 0 and commutes with tau. Maps
of M are recovered by projecting.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .band_geometry import (
    HALF,
    BandPoint,
    CoverPoint,
    RegionDecomposition,
    apply_deck,
    band_point,
    canonicalize,
    count_components,
    distance_arrays,
    project,
    region_decomposition,
)
from .errors import ConfigurationError

FD_STEP = 1e-5
_S = np.array([1.0, -1.0])


# ---------------------------------------------------------------------------
# smooth profiles

# Rate of the exp(-c/t) seams. Small enough that the profile is strictly
# monotone in double precision at a resolution of 1e-3 of the transition.
TRANSITION_RATE = 1.0 / 32.0


def smooth_transition(s):
    """C-infinity monotone map [0,1] -> [0,1] built from exp(-c/t); returns (G, G')."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    inner = (s > 0.0) & (s < 1.0)
    si = np.where(inner, s, 0.5)
    c = TRANSITION_RATE
    L = c * (1.0 / si - 1.0 / (1.0 - si))
    g = np.where(inner, 0.5 * (1.0 - np.tanh(L / 2.0)), np.where(s >= 1.0, 1.0, 0.0))
    e = np.exp(-np.abs(L))
    dg = np.where(inner, c * (1.0 / si**2 + 1.0 / (1.0 - si) ** 2) * e / (1.0 + e) ** 2, 0.0)
    return g, dg


@dataclass(frozen=True)
class StepProfile:
    """1 on [0, w-d], strictly decreasing on [w-d, w-d/2], 0 on [w-d/2, w]."""

    w: float
    d: float

    def __call__(self, r):
        return self.value_and_slope(r)[0]

    def value_and_slope(self, r):
        r = np.asarray(r, dtype=float)
        s = (r - (self.w - self.d)) / (self.d / 2.0)
        g, dg = smooth_transition(s)
        return 1.0 - g, -dg * (2.0 / self.d)


@dataclass(frozen=True)
class BumpProfile:
    """Even extension of a step profile to [-w, w]."""

    step: StepProfile

    @property
    def w(self) -> float:
        return self.step.w

    @property
    def d(self) -> float:
        return self.step.d

    def __call__(self, v):
        return self.step(np.abs(v))

    def value_and_slope(self, v):
        v = np.asarray(v, dtype=float)
        f, df = self.step.value_and_slope(np.abs(v))
        return f, df * np.sign(v)


def make_step(w: float, d: float) -> StepProfile:
    if not (0 < d < w):
        raise ConfigurationError(f"step profile needs 0 < d < w (got w={w}, d={d})")
    return StepProfile(float(w), float(d))


def make_bump(w: float, d: float) -> BumpProfile:
    return BumpProfile(make_step(w, d))


# ---------------------------------------------------------------------------
# isotopy interface

def _conj_deck(J, n):
    """Conjugate 2x2 Jacobians by the differential of tau^n."""
    n = np.asarray(n)
    s = np.where(n % 2 == 0, 1.0, -1.0)
    out = J.copy()
    out[..., 0, 1] *= s
    out[..., 1, 0] *= s
    return out


class Isotopy:
    """Base class; subclasses implement the lifted, vectorised maps."""

    name = "isotopy"

    def lift_map(self, t, x, y):
        raise NotImplementedError

    def lift_inverse(self, t, x, y):
        raise NotImplementedError

    def lift_jacobian(self, t, x, y):
        raise NotImplementedError

    def support_contains(self, x, y):
        """Canonical points that move for some t (conservative)."""
        raise NotImplementedError

    # BandPoint conveniences
    def eval(self, t: float, p: BandPoint) -> BandPoint:
        X, Y = self.lift_map(t, np.array([p.x]), np.array([p.y]))
        return project(CoverPoint(float(X[0]), float(np.clip(Y[0], -HALF, HALF))))

    def eval_inverse(self, t: float, p: BandPoint) -> BandPoint:
        X, Y = self.lift_inverse(t, np.array([p.x]), np.array([p.y]))
        return project(CoverPoint(float(X[0]), float(np.clip(Y[0], -HALF, HALF))))

    def jacobian(self, t: float, p: BandPoint) -> np.ndarray:
        return self.lift_jacobian(t, np.array([p.x]), np.array([p.y]))[0]

    def fd_jacobian(self, t, x, y, h: float = FD_STEP):
        """Central finite-difference Jacobian of the lifted map."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        xp, yp = self.lift_map(t, x + h, y)
        xm, ym = self.lift_map(t, x - h, y)
        xq, yq = self.lift_map(t, x, y + h)
        xr, yr = self.lift_map(t, x, y - h)
        J = np.empty(x.shape + (2, 2))
        J[..., 0, 0] = (xp - xm) / (2 * h)
        J[..., 1, 0] = (yp - ym) / (2 * h)
        J[..., 0, 1] = (xq - xr) / (2 * h)
        J[..., 1, 1] = (yq - yr) / (2 * h)
        return J

    def fd_determinant(self, t, x, y, h: float = FD_STEP):
        """Jacobian determinant by central differences in the natural chart."""
        return np.linalg.det(self.fd_jacobian(t, x, y, h))


class IdentityIsotopy(Isotopy):
    name = "identity"

    def lift_map(self, t, x, y):
        return np.asarray(x, float) + 0.0, np.asarray(y, float) + 0.0

    lift_inverse = lift_map

    def lift_jacobian(self, t, x, y):
        shape = np.broadcast(np.asarray(t), np.asarray(x)).shape
        return np.broadcast_to(np.eye(2), shape + (2, 2)).copy()

    def support_contains(self, x, y):
        return np.zeros(np.shape(x), dtype=bool)


# ---------------------------------------------------------------------------
# graph slides: shears along the graph of a function

def _zero(x):
    return np.zeros_like(np.asarray(x, float))


class GraphSlide(Isotopy):
    """Shear along a band around the graph y = g(x).

    In sheared coordinates (x, v = y - g(x)) the map is
    (x, v) -> (x + laps * t * b(v), v), with b an even bump of half-width w.
    ``kind='mobius'`` needs g(x+1) = -g(x): one core loop per unit lap.
    ``kind='annulus'`` needs g 2-periodic: the band is two-sided and a full
    loop takes laps = +-2.
    """

    def __init__(self, g: Callable, dg: Callable, w: float, d: float, laps: float = 1.0,
                 kind: str = "mobius", name: str = "graph_slide"):
        if kind not in ("mobius", "annulus"):
            raise ConfigurationError(f"unknown slide kind {kind!r}")
        self.g, self.dg = g, dg
        self.bump = make_bump(w, d)
        self.w, self.d = float(w), float(d)
        self.laps = float(laps)
        self.kind = kind
        self.name = name
        xs = np.linspace(-1.0, 1.0, 4001)
        if float(np.max(np.abs(g(xs)))) + w >= HALF:
            raise ConfigurationError(f"{name}: band reaches the boundary (max|g| + w >= 1/2)")

    def _branches(self, x, y):
        v0 = y - self.g(x)
        use0 = np.abs(v0) < self.w
        if self.kind == "mobius":
            return use0, np.zeros_like(use0)
        v1 = -y - self.g(x - 1.0)
        use1 = ~use0 & (np.abs(v1) < self.w)
        return use0, use1

    def _forward(self, t, x, y, sign=1.0):
        v = y - self.g(x)
        xn = x + sign * self.laps * t * self.bump(v)
        return xn, v + self.g(xn)

    def _backward(self, t, x, y):
        v = y - self.g(x)
        xo = x - self.laps * t * self.bump(v)
        return xo, v + self.g(xo)

    def _jac0(self, t, x, y):
        v = y - self.g(x)
        b, db = self.bump.value_and_slope(v)
        s = self.laps * np.asarray(t, float)
        xn = x + s * b
        gx, gxn = self.dg(x), self.dg(xn)
        J = np.empty(np.broadcast(x, s).shape + (2, 2))
        J[..., 0, 0] = 1.0 - s * db * gx
        J[..., 0, 1] = s * db
        J[..., 1, 0] = -gx + gxn * J[..., 0, 0]
        J[..., 1, 1] = 1.0 + gxn * J[..., 0, 1]
        return J

    def _dispatch(self, t, x, y, f):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        t = np.broadcast_to(np.asarray(t, float), np.broadcast(x, y).shape)
        x, y = np.broadcast_arrays(x, y)
        X, Y = x.copy(), y.copy()
        use0, use1 = self._branches(x, y)
        if use0.any():
            X[use0], Y[use0] = f(t[use0], x[use0], y[use0])
        if use1.any():
            # conjugate by tau: tau^{-1}(x, y) = (x - 1, -y)
            a, b = f(t[use1], x[use1] - 1.0, -y[use1])
            X[use1], Y[use1] = a + 1.0, -b
        return X, Y

    def fd_determinant(self, t, x, y, h: float = FD_STEP):
        """Central differences in the sheared chart (x, v = y - g(x)).

        The chart change has unit determinant, so the planar determinant
        equals the determinant measured in (x, v).
        """
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        t = np.broadcast_to(np.asarray(t, float), np.broadcast(x, y).shape)
        x, y = np.broadcast_arrays(x, y)
        use0, use1 = self._branches(x, y)
        xs = np.where(use1, x - 1.0, x)
        ys = np.where(use1, -y, y)
        v = ys - self.g(xs)

        def chart(xx, vv):
            X, Y = self._forward(t, xx, vv + self.g(xx))
            return X, Y - self.g(X)

        xp, vp = chart(xs + h, v)
        xm, vm = chart(xs - h, v)
        xq, vq = chart(xs, v + h)
        xr, vr = chart(xs, v - h)
        det = ((xp - xm) * (vq - vr) - (xq - xr) * (vp - vm)) / (4 * h * h)
        return np.where(use0 | use1, det, 1.0)

    def lift_map(self, t, x, y):
        return self._dispatch(t, x, y, self._forward)

    def lift_inverse(self, t, x, y):
        return self._dispatch(t, x, y, self._backward)

    def lift_jacobian(self, t, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        t = np.broadcast_to(np.asarray(t, float), np.broadcast(x, y).shape)
        x, y = np.broadcast_arrays(x, y)
        J = np.broadcast_to(np.eye(2), x.shape + (2, 2)).copy()
        use0, use1 = self._branches(x, y)
        if use0.any():
            J[use0] = self._jac0(t[use0], x[use0], y[use0])
        if use1.any():
            J[use1] = _conj_deck(self._jac0(t[use1], x[use1] - 1.0, -y[use1]), 1)
        return J

    def support_contains(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        lim = self.w - self.d / 2.0
        inside = np.abs(y - self.g(x)) < lim
        if self.kind == "annulus":
            inside |= np.abs(-y - self.g(x - 1.0)) < lim
        return inside


def band_slide(a: float, d: float, laps: float = 1.0) -> GraphSlide:
    """(a, d)-sliding isotopy of the sub-band M_a = pi(R x [-a/2, a/2])."""
    if not (0 < a < 1):
        raise ConfigurationError(f"band slide needs 0 < a < 1 (got {a})")
    if not (0 < d < a / 4):
        raise ConfigurationError(f"band slide needs 0 < d < a/4 (got d={d}, a={a})")
    return GraphSlide(_zero, _zero, a / 2.0, d, laps, "mobius", name=f"band_slide(a={a:g}, d={d:g})")


class DiskSlide(Isotopy):
    """Rotation by 2*pi*turns*t*s(r) about a center inside the chart."""

    def __init__(self, center: BandPoint, radius: float, d: float, turns: float = 1.0,
                 name: str = "disk_slide"):
        cx, cy = center.x, center.y
        if radius <= 0 or abs(cx) + radius >= HALF or abs(cy) + radius >= HALF:
            raise ConfigurationError(
                f"disk of radius {radius:g} about ({cx:g}, {cy:g}) is not embedded in the chart")
        self.center = center
        self.cx, self.cy = cx, cy
        self.radius = float(radius)
        self.d = float(d)
        self.step = make_step(radius, d)
        self.turns = float(turns)
        self.name = name

    def _rotate(self, t, xc, yc, sign):
        dx, dy = xc - self.cx, yc - self.cy
        r = np.hypot(dx, dy)
        phi = sign * 2.0 * math.pi * self.turns * t * self.step(r)
        c, s = np.cos(phi), np.sin(phi)
        still = phi == 0.0
        return (np.where(still, xc, self.cx + c * dx - s * dy),
                np.where(still, yc, self.cy + s * dx + c * dy))

    def _apply(self, t, x, y, sign):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        xc, yc, n = canonicalize(x, y)
        t = np.broadcast_to(np.asarray(t, float), xc.shape)
        xr, yr = self._rotate(t, xc, yc, sign)
        return apply_deck(xr, yr, n)

    def lift_map(self, t, x, y):
        return self._apply(t, x, y, 1.0)

    def lift_inverse(self, t, x, y):
        return self._apply(t, x, y, -1.0)

    def lift_jacobian(self, t, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        xc, yc, n = canonicalize(x, y)
        t = np.broadcast_to(np.asarray(t, float), xc.shape)
        dx, dy = xc - self.cx, yc - self.cy
        r = np.hypot(dx, dy)
        f, df = self.step.value_and_slope(r)
        k = 2.0 * math.pi * self.turns * t
        phi = k * f
        c, s = np.cos(phi), np.sin(phi)
        rs = np.where(r > 0, r, 1.0)
        gx = np.where(r > 0, k * df * dx / rs, 0.0)
        gy = np.where(r > 0, k * df * dy / rs, 0.0)
        # d/dphi of rotated vector
        ux, uy = -s * dx - c * dy, c * dx - s * dy
        J = np.empty(xc.shape + (2, 2))
        J[..., 0, 0] = c + ux * gx
        J[..., 0, 1] = -s + ux * gy
        J[..., 1, 0] = s + uy * gx
        J[..., 1, 1] = c + uy * gy
        return _conj_deck(J, n)

    def support_contains(self, x, y):
        xc, yc, _ = canonicalize(x, y)
        return np.hypot(xc - self.cx, yc - self.cy) < self.radius - self.d / 2.0

    def fd_determinant(self, t, x, y, h: float = FD_STEP):
        """Central differences in polar coordinates about the center.

        The area form is r dr dtheta, so the planar determinant is
        (r'/r) times the polar one. Points within 2h of the center use the
        planar differences, where the map is a rigid rotation.
        """
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        xc, yc, _ = canonicalize(x, y)
        t = np.broadcast_to(np.asarray(t, float), xc.shape)
        r = np.hypot(xc - self.cx, yc - self.cy)
        th = np.arctan2(yc - self.cy, xc - self.cx)

        def polar(rr, tt):
            X, Y = self._rotate(t, self.cx + rr * np.cos(tt), self.cy + rr * np.sin(tt), 1.0)
            return np.hypot(X - self.cx, Y - self.cy), np.arctan2(Y - self.cy, X - self.cx)

        def dtheta(a, b):
            return (a - b + math.pi) % (2 * math.pi) - math.pi

        r0, _ = polar(r, th)
        rp, tp = polar(r + h, th)
        rm, tm = polar(np.maximum(r - h, 0.0), th)
        rq, tq = polar(r, th + h)
        rs, ts = polar(r, th - h)
        drr, dtr = (rp - rm) / (2 * h), dtheta(tp, tm) / (2 * h)
        drt, dtt = (rq - rs) / (2 * h), dtheta(tq, ts) / (2 * h)
        det = (drr * dtt - drt * dtr) * r0 / np.where(r > 0, r, 1.0)
        near = r < 2 * h
        if near.any():
            det = np.where(near, np.linalg.det(self.fd_jacobian(t, x, y, h)), det)
        return det


def disk_slide(center: BandPoint, a: float, d: float, turns: float = 1.0) -> DiskSlide:
    if not (0 < d < a / 4):
        raise ConfigurationError(f"disk slide needs 0 < d < a/4 (got d={d}, a={a})")
    return DiskSlide(center, math.sqrt(a / math.pi), d, turns,
                     name=f"disk_slide(a={a:g}, d={d:g})")


# ---------------------------------------------------------------------------
# composition

class Composite(Isotopy):
    """Time concatenation: pieces[0] runs first."""

    def __init__(self, pieces: Sequence[Isotopy], name: str | None = None):
        if not pieces:
            pieces = [IdentityIsotopy()]
        self.pieces = list(pieces)
        self.name = name or "compose(" + ", ".join(p.name for p in self.pieces) + ")"

    def _local_times(self, t):
        n = len(self.pieces)
        t = np.asarray(t, float)
        return [np.clip(t * n - j, 0.0, 1.0) for j in range(n)]

    def lift_map(self, t, x, y):
        X, Y = np.asarray(x, float), np.asarray(y, float)
        for piece, tj in zip(self.pieces, self._local_times(t)):
            X, Y = piece.lift_map(tj, X, Y)
        return X, Y

    def lift_inverse(self, t, x, y):
        X, Y = np.asarray(x, float), np.asarray(y, float)
        for piece, tj in reversed(list(zip(self.pieces, self._local_times(t)))):
            X, Y = piece.lift_inverse(tj, X, Y)
        return X, Y

    def lift_jacobian(self, t, x, y):
        X, Y = np.asarray(x, float), np.asarray(y, float)
        J = None
        for piece, tj in zip(self.pieces, self._local_times(t)):
            Jp = piece.lift_jacobian(tj, X, Y)
            J = Jp if J is None else Jp @ J
            X, Y = piece.lift_map(tj, X, Y)
        return J

    def fd_determinant(self, t, x, y, h: float = FD_STEP):
        """Chain rule: product of the pieces' determinants along the orbit."""
        X, Y = np.asarray(x, float), np.asarray(y, float)
        det = np.ones(np.broadcast(X, Y, np.asarray(t)).shape)
        for piece, tj in zip(self.pieces, self._local_times(t)):
            det = det * piece.fd_determinant(tj, X, Y, h)
            X, Y = piece.lift_map(tj, X, Y)
        return det

    def support_contains(self, x, y):
        out = np.zeros(np.shape(x), dtype=bool)
        for p in self.pieces:
            out |= p.support_contains(x, y)
        return out


class Inverse(Isotopy):
    """t -> f_{1-t} o f_1^{-1}; its time-1 map is the inverse of f's."""

    def __init__(self, iso: Isotopy):
        self.iso = iso
        self.name = f"invert({iso.name})"

    def lift_map(self, t, x, y):
        a, b = self.iso.lift_inverse(1.0, x, y)
        return self.iso.lift_map(1.0 - np.asarray(t, float), a, b)

    def lift_inverse(self, t, x, y):
        a, b = self.iso.lift_inverse(1.0 - np.asarray(t, float), x, y)
        return self.iso.lift_map(1.0, a, b)

    def lift_jacobian(self, t, x, y):
        a, b = self.iso.lift_inverse(1.0, x, y)
        J1 = self.iso.lift_jacobian(1.0, a, b)
        Jt = self.iso.lift_jacobian(1.0 - np.asarray(t, float), a, b)
        return Jt @ np.linalg.inv(J1)

    def fd_determinant(self, t, x, y, h: float = FD_STEP):
        a, b = self.iso.lift_inverse(1.0, x, y)
        return (self.iso.fd_determinant(1.0 - np.asarray(t, float), a, b, h)
                / self.iso.fd_determinant(1.0, a, b, h))

    def support_contains(self, x, y):
        return self.iso.support_contains(x, y)


def compose(isotopies: Sequence[Isotopy]) -> Isotopy:
    return Composite(isotopies)


def invert(iso: Isotopy) -> Isotopy:
    if isinstance(iso, Inverse):
        return iso.iso
    return Inverse(iso)


def power(iso: Isotopy, p: int) -> Isotopy:
    if p == 0:
        return IdentityIsotopy()
    if p == 1:
        return iso
    base = iso if p > 0 else invert(iso)
    return Composite([base] * abs(p), name=f"power({iso.name}, {p})")


# ---------------------------------------------------------------------------
# density check and trajectory export

def density_check(iso: Isotopy, samples: int = 10_000, seed: int = 0,
                  method: str = "closed") -> dict:
    """max |det J - 1| over random (t, p), J closed form or central differences."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, 1.0, samples)
    x = rng.uniform(-HALF, HALF, samples)
    y = rng.uniform(-HALF, HALF, samples)
    if method == "closed":
        J = iso.lift_jacobian(t, x, y)
    elif method == "fd":
        J = None
    else:
        raise ConfigurationError(f"unknown density method {method!r}")
    det = np.linalg.det(J) if J is not None else iso.fd_determinant(t, x, y)
    dev = np.abs(det - 1.0)
    return {"isotopy": iso.name, "method": method, "samples": samples,
            "max_deviation": float(dev.max()), "mean_deviation": float(dev.mean())}


def trajectory(iso: Isotopy, z: Sequence[BandPoint], times) -> np.ndarray:
    """Canonical positions, shape (len(times), strands, 2)."""
    times = np.asarray(times, float)
    out = np.empty((times.size, len(z), 2))
    for k, p in enumerate(z):
        X, Y = iso.lift_map(times, np.full(times.size, p.x), np.full(times.size, p.y))
        xc, yc, _ = canonicalize(X, Y)
        out[:, k, 0], out[:, k, 1] = xc, yc
    return out


def trajectory_csv(iso: Isotopy, z: Sequence[BandPoint], n_times: int = 101) -> str:
    times = np.linspace(0.0, 1.0, n_times)
    pos = trajectory(iso, z, times)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "strand", "x", "y"])
    for i, t in enumerate(times):
        for k in range(len(z)):
            w.writerow([f"{t:.6f}", k + 1, f"{pos[i, k, 0]:.12f}", f"{pos[i, k, 1]:.12f}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# catalog curves

@dataclass
class CurveSpec:
    id: str
    points: np.ndarray  # closed polyline, canonical coordinates, shape (m, 2)
    side: str  # "mobius" or "disk"
    area: float
    params: dict
    N: int
    n_c: int
    certificate: dict = field(default_factory=dict)


def _flat_curve_points(h: float, m: int = 400) -> np.ndarray:
    xs = np.linspace(-HALF, HALF, m, endpoint=False)
    top = np.stack([xs, np.full(m, h)], axis=1)
    bottom = np.stack([xs, np.full(m, -h)], axis=1)
    return np.concatenate([top, bottom])


def _circle_points(cx: float, cy: float, R: float, m: int = 720) -> np.ndarray:
    th = np.linspace(0.0, 2 * math.pi, m, endpoint=False)
    return np.stack([cx + R * np.cos(th), cy + R * np.sin(th)], axis=1)


def unwrap_polyline(points: np.ndarray, closed: bool = True) -> np.ndarray:
    """Continuous cover lift of a polyline given in canonical coordinates."""
    pts = np.asarray(points, float)
    if closed:
        pts = np.concatenate([pts, pts[:1]])
    out = np.empty_like(pts)
    out[0] = pts[0]
    for k in range(1, len(pts)):
        ax, ay = out[k - 1]
        best, best_d = None, math.inf
        n0 = math.floor(ax + HALF)
        for n in (n0 - 1, n0, n0 + 1):
            bx, by = apply_deck(pts[k, 0], pts[k, 1], n)
            dd = math.hypot(float(bx) - ax, float(by) - ay)
            if dd < best_d:
                best, best_d = (float(bx), float(by)), dd
        out[k] = best
    return out


def densify(cover_pts: np.ndarray, max_step: float = 2e-3) -> np.ndarray:
    """Insert points along straight cover segments."""
    pieces = []
    for a, b in zip(cover_pts[:-1], cover_pts[1:]):
        k = max(1, int(math.ceil(math.hypot(*(b - a)) / max_step)))
        s = np.arange(k)[:, None] / k
        pieces.append(a + s * (b - a))
    pieces.append(cover_pts[-1:])
    return np.concatenate(pieces)


def curve_invariants(points: np.ndarray, dec: RegionDecomposition) -> dict:
    """Recompute |c cap l| and the branch counts n(c, R) from a closed polyline."""
    lift = densify(unwrap_polyline(points, closed=True))
    n = np.floor(lift[:, 0] + HALF).astype(int)
    N = int(np.count_nonzero(np.diff(n)))
    xc, yc, _ = canonicalize(lift[:-1, 0], lift[:-1, 1])
    branches = {c.name: count_components(c.contains(xc, yc), closed=True) for c in dec.cells()}
    return {"N": N, "n_c": max(branches.values()), "branches": branches}


def tubular_reach(curve: CurveSpec, sep_ratio: float = 1.2) -> float:
    """Sampled normal-reach: min of curvature radius, half-bottleneck and boundary gap."""
    lift = unwrap_polyline(curve.points, closed=True)
    seg = np.diff(lift, axis=0)
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])
    total = arc[-1]
    pts = curve.points[::max(1, len(curve.points) // 360)]
    arcs = arc[:-1][::max(1, len(curve.points) // 360)]
    xi, yi = pts[:, 0][:, None], pts[:, 1][:, None]
    D = distance_arrays(xi, yi, pts[:, 0][None, :], pts[:, 1][None, :])
    S = np.abs(arcs[:, None] - arcs[None, :])
    S = np.minimum(S, total - S)
    far = S > sep_ratio * D
    bottleneck = float(D[far].min()) / 2.0 if far.any() else math.inf
    # curvature radius from turning angles of the lifted polyline
    ang = np.unwrap(np.arctan2(seg[:, 1], seg[:, 0]))
    dtheta = np.abs(np.diff(ang))
    ds = 0.5 * (np.hypot(*seg[:-1].T) + np.hypot(*seg[1:].T))
    with np.errstate(divide="ignore"):
        kappa = np.where(dtheta > 1e-12, ds / np.maximum(dtheta, 1e-300), math.inf)
    curvature_radius = float(kappa.min())
    gap = float(HALF - np.abs(curve.points[:, 1]).max())
    if curve.side == "disk":
        gap = min(gap, float(HALF - np.abs(curve.points[:, 0]).max()))
    return min(bottleneck, curvature_radius, gap)


DEFAULT_BASE = (-0.25, 0.25)
DEFAULT_DECOMPOSITION = (0.5, 0.5, 1.0 / 16)
CORE_NBHD_HEIGHT = 0.125
TWO_PUNCTURE_RADIUS = 0.4


def catalog_curve(name: str, dec: RegionDecomposition | None = None,
                  base: tuple = DEFAULT_BASE) -> CurveSpec:
    dec = dec or region_decomposition(*DEFAULT_DECOMPOSITION)
    if name == "c_boundary":
        h = HALF - dec.eps / 2.0
        pts = _flat_curve_points(h)
        side, area, params = "mobius", 2 * h, {"height": h}
        stored = {"N": 2, "n_c": 1}
    elif name == "c_core_nbhd":
        h = CORE_NBHD_HEIGHT
        pts = _flat_curve_points(h)
        side, area, params = "mobius", 2 * h, {"height": h}
        stored = {"N": 2, "n_c": 2}
    elif name == "c_two_punctures":
        cx = 0.5 * (base[0] + base[1])
        R = TWO_PUNCTURE_RADIUS
        pts = _circle_points(cx, 0.0, R)
        side, area, params = "disk", math.pi * R * R, {"center": (cx, 0.0), "radius": R}
        stored = {"N": 0, "n_c": 2}
    else:
        raise ConfigurationError(f"unknown catalog curve {name!r}")
    inv = curve_invariants(pts, dec)
    cert = {
        "avoids_base_points": bool(min(
            float(distance_arrays(pts[:, 0], pts[:, 1], np.array(b), np.array(0.0)).min())
            for b in base) > 1e-3),
        "two_sided": True,
        "contained_in_N": bool(_in_N(pts, dec)),
        "N_matches": inv["N"] == stored["N"],
        "n_c_matches": inv["n_c"] == stored["n_c"],
    }
    return CurveSpec(name, pts, side, area, params, stored["N"], stored["n_c"], cert)


def _in_N(pts, dec: RegionDecomposition) -> bool:
    inside = np.zeros(len(pts), dtype=bool)
    for c in dec.cells():
        inside |= c.contains(pts[:, 0], pts[:, 1])
    return bool(inside.all())


CATALOG = ("c_boundary", "c_core_nbhd", "c_two_punctures")


def flat_curve(height: float, name: str = "level") -> CurveSpec:
    """Core-parallel curve pi(R x {+-height}), used for contraction levels."""
    pts = _flat_curve_points(height)
    return CurveSpec(name, pts, "mobius", 2 * height, {"height": height}, 2, -1)


def supported_twist(curve: CurveSpec, xi: float | None = None, d: float | None = None,
                    exponent: int = 1) -> Isotopy:
    """xi-supported Dehn twist along a catalog curve.

    The embedding of the model band/disk onto the inner side is the identity
    (Mobius sides) or a translation (disks), so the twist is a sliding isotopy.
    """
    reach = tubular_reach(curve)
    if xi is None:
        xi = reach / 2.0
    a = curve.area
    if d is None:
        d = min(a / 8.0, reach / 2.0)
    if xi > reach:
        raise ConfigurationError(f"xi={xi:g} exceeds the tubular reach {reach:g} of {curve.id}")
    if d > xi:
        raise ConfigurationError(
            f"collar width d={d:g} does not fit in the xi-neighbourhood (xi={xi:g}) of {curve.id}")
    if curve.side == "mobius":
        iso = band_slide(a, d)
    else:
        cx, cy = curve.params["center"]
        iso = disk_slide(band_point(cx, cy), a, d)
    iso.name = f"twist({curve.id})"
    iso.xi, iso.collar = xi, d
    return iso if exponent == 1 else power(iso, exponent)


# ---------------------------------------------------------------------------
# contraction map

class ContractionMap:
    """Product map L = (phi_x, phi_y) contracting towards the cut, the dividing
    line and the boundary, linear with slope 1/2 near those attractors."""

    def __init__(self, a1: float, a2: float, eps: float, margin: float = 0.1):
        self.dec = region_decomposition(a1, a2, eps)
        self.eps = eps
        self.px = self.dec.dividing_line_x
        self.margin = margin

    def _blend(self, x, x0, x1, f0, f1):
        s = (x - x0) / (x1 - x0)
        s = (s - self.margin) / (1.0 - 2 * self.margin)
        g, _ = smooth_transition(s)
        return (1.0 - g) * f0 + g * f1

    def phi_x(self, x):
        x = np.asarray(x, float)
        e, p = self.eps, self.px
        left = -HALF + (x + HALF) / 2.0
        mid = p + (x - p) / 2.0
        right = HALF + (x - HALF) / 2.0
        out = np.where(x <= -HALF + e, left, 0.0)
        out = np.where((x > -HALF + e) & (x < p - e), self._blend(x, -HALF + e, p - e, left, mid), out)
        out = np.where((x >= p - e) & (x <= p + e), mid, out)
        out = np.where((x > p + e) & (x < HALF - e), self._blend(x, p + e, HALF - e, mid, right), out)
        out = np.where(x >= HALF - e, right, out)
        return out

    def phi_y(self, y):
        y = np.asarray(y, float)
        e = self.eps
        y1 = HALF - e
        m0 = (HALF - e / 2.0) / y1
        a = np.abs(y)
        inner = m0 * a
        outer = HALF + (a - HALF) / 2.0
        core = self._blend(a, 0.0, y1, inner, outer)
        val = np.where(a >= y1, outer, core)
        return np.sign(y) * val

    def __call__(self, p: BandPoint) -> BandPoint:
        return band_point(float(self.phi_x(p.x)), float(self.phi_y(p.y)))

    def apply_points(self, pts: np.ndarray, times: int = 1) -> np.ndarray:
        out = np.asarray(pts, float).copy()
        for _ in range(times):
            out = np.stack([self.phi_x(out[:, 0]), self.phi_y(out[:, 1])], axis=1)
        return out

    def level_decomposition(self, i: int) -> RegionDecomposition:
        return region_decomposition(self.dec.a1, self.dec.a2, self.eps / 2**i)


def contraction_map(a1: float, a2: float, eps: float):
    L = ContractionMap(a1, a2, eps)
    return L, L.phi_x, L.phi_y


# ---------------------------------------------------------------------------
# generator isotopies for the braid generators

@dataclass(frozen=True)
class BaseGeometry:
    t1: float = DEFAULT_BASE[0]
    t2: float = DEFAULT_BASE[1]

    def __post_init__(self):
        if not (-HALF < self.t1 < self.t2 < HALF):
            raise ConfigurationError("base points need -1/2 < t1 < t2 < 1/2")

    @property
    def points(self):
        return band_point(self.t1, 0.0), band_point(self.t2, 0.0)

    def t(self, strand: int) -> float:
        return self.t1 if strand == 1 else self.t2


def _antiperiodic(fn):
    def g(x):
        x = np.asarray(x, float)
        xc, _, n = canonicalize(x, np.zeros_like(x))
        return np.where(n % 2 == 0, 1.0, -1.0) * fn(xc)
    return g


def core_push(base: BaseGeometry, strand: int, height: float = 0.3,
              w: float = 0.15, d: float = 0.06) -> GraphSlide:
    """Push of one base point once around the core, along y = -h sin(pi (x - t_i))."""
    ti = base.t(strand)
    tj = base.t(3 - strand)
    k = math.pi

    def g(x):
        return -height * np.sin(k * (np.asarray(x, float) - ti))

    def dg(x):
        return -height * k * np.cos(k * (np.asarray(x, float) - ti))

    if abs(g(tj)) < w:
        raise ConfigurationError("core push band would contain the other base point")
    return GraphSlide(g, dg, w, d, 1.0, "mobius", name=f"core_push({strand})")


def chord_push(base: BaseGeometry, strand: int, r: float, w: float = 0.12,
               d: float = 0.05) -> GraphSlide:
    """Push along the broken chord z_i -> pi(1/2, r) -> z_i (graph of a PL function)."""
    ti = base.t(strand)

    def fn(xc):
        right = r * (xc - ti) / (HALF - ti)
        left = -r * (ti - xc) / (ti + HALF)
        return np.where(xc >= ti, right, left)

    def dfn(xc):
        return np.where(xc >= ti, r / (HALF - ti), r / (ti + HALF))

    g = _antiperiodic(fn)
    dg = _antiperiodic(dfn)
    tj = base.t(3 - strand)
    if abs(float(g(np.array(tj)))) <= w:
        raise ConfigurationError("chord push band would contain the other base point")
    return GraphSlide(g, dg, w, d, 1.0, "mobius", name=f"chord_push({strand}, r={r:g})")


def boundary_push(base: BaseGeometry, strand: int, depth: float = 0.4, dent: float = 0.12,
                  w: float = 0.07, d: float = 0.03) -> GraphSlide:
    """Push of one base point around a boundary-parallel loop, traversed in -x.

    The loop runs at height -depth except for a narrow dent reaching the base point.
    """
    ti = base.t(strand)
    prof = make_bump(dent, 0.95 * dent)

    def wrap(x):
        return (np.asarray(x, float) - ti + 1.0) % 2.0 - 1.0

    def g(x):
        return -depth + depth * prof(wrap(x))

    def dg(x):
        return depth * prof.value_and_slope(wrap(x))[1]

    return GraphSlide(g, dg, w, d, -2.0, "annulus", name=f"boundary_push({strand})")


def base_disk(base: BaseGeometry, turns: float, margin: float = 0.08) -> DiskSlide:
    cx = 0.5 * (base.t1 + base.t2)
    R = min(0.45, HALF - abs(cx) - 0.02)
    half = 0.5 * (base.t2 - base.t1)
    d = R - half - margin
    if d <= 0:
        raise ConfigurationError("base points too far apart for the exchange disk")
    return DiskSlide(band_point(cx, 0.0), R, d, turns, name=f"base_disk(turns={turns:g})")


def generator_isotopies(base: BaseGeometry | None = None) -> dict:
    """Explicit isotopies whose base trajectories are the braid generators.

    B: counter-clockwise half exchange; A = B^2; R2, R3: the first/second
    base point pushed once around the core in +x. A12 and A13 are pushes
    around a boundary-parallel loop used as independent relation oracles.
    """
    base = base or BaseGeometry()
    A = base_disk(base, 1.0)
    out = {
        "B": base_disk(base, 0.5),
        "A": A,
        "R2": core_push(base, 1),
        "R3": core_push(base, 2),
        "A12": boundary_push(base, 1),
        "A13": Composite([A, boundary_push(base, 2), invert(A)], name="A13_push"),
    }
    return out
