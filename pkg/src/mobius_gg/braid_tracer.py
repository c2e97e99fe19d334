"""Compile the braid of an isotopy orbit closed up by geodesic legs.

A configuration z is moved by the isotopy, then both strands are joined back
to the base points by straight chart legs. The resulting loop is cut at the
moments a strand passes through the branch cut. Each planar piece is closed
in the chart disk and contributes B^k, k the relative winding divided by pi.
Each cut passage contributes an elementary crossing braid looked up from the
derived table.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .band_geometry import (
    HALF,
    BandPoint,
    band_point,
    distance_arrays,
    geodesic_interior,
    min_distance_simultaneous,
)
from .braid_core import (
    A,
    B,
    IDENTITY,
    BraidWord,
    GeneratorTable,
    Unknown,
    _is_conjugate_of_generator,
    default_table,
    equal,
    is_pure,
    strand_degrees,
    word_ball,
)
from .errors import ConfigurationError, TracingError
from .isotopy_engine import BaseGeometry, Isotopy, unwrap_polyline

COLLISION_TOL = 1e-6
LEG_TOL = 1e-10
PERTURBATION = 1e-7
WINDING_TOL = 1e-3
MAX_STEP = 0.05
MAX_SAMPLES = 200_000


# ---------------------------------------------------------------------------
# records

@dataclass
class CrossingEvent:
    strand: int
    time: float
    y_at_crossing: float  # canonical y on the exit side
    side: str  # 'left' (exit through x = +1/2) or 'right' (exit through x = -1/2)
    sign: int
    r: float  # height of the crossing point written as pi(1/2, r)
    eta_class: tuple | None = None  # (a, b) with eta(q, v) = A^a eta_0 A^b


@dataclass
class Omega4Certificate:
    ok: bool
    min_distance: float
    reason: str = ""


@dataclass
class ExtractionReport:
    word: BraidWord
    events: list
    segment_twists: list  # half-twist counts k_j (B-exponents)
    omega4: dict
    mode: str
    diagnostics: dict = field(default_factory=dict)
    z: tuple = ()

    @property
    def a_exponents(self) -> list:
        return [k // 2 for k in self.segment_twists]

    def crossing_counts(self) -> tuple:
        c = {1: 0, 2: 0}
        for e in self.events:
            c[e.strand] += e.sign
        return c[1], c[2]

    def to_record(self) -> dict:
        return {
            "word": str(self.word),
            "word_derived": self.word.derived_view(),
            "events": [asdict(e) for e in self.events],
            "segment_twists": list(self.segment_twists),
            "omega4": {k: asdict(v) for k, v in self.omega4.items()},
            "mode": self.mode,
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# Omega^4 membership

def _base_points(base: BaseGeometry | None) -> tuple:
    base = base or BaseGeometry()
    return base, np.array([[base.t1, 0.0], [base.t2, 0.0]])


def check_omega4(z: Sequence[BandPoint], base: BaseGeometry | None = None,
                 tol: float = COLLISION_TOL) -> Omega4Certificate:
    """Both strands in the open chart and the simultaneous legs from the base stay apart."""
    base, zb = _base_points(base)
    z1, z2 = z
    if not (z1.in_chart_interior() and z2.in_chart_interior()):
        return Omega4Certificate(False, 0.0, "point on the branch cut")
    if z1 == z2:
        return Omega4Certificate(False, 0.0, "coincident points")
    b1, b2 = band_point(*zb[0]), band_point(*zb[1])
    d = min_distance_simultaneous(geodesic_interior(b1, z1), geodesic_interior(b2, z2))
    if d <= tol:
        return Omega4Certificate(False, d, "closure legs collide")
    return Omega4Certificate(True, d)


# ---------------------------------------------------------------------------
# winding helpers

def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


def relative_winding(configs: np.ndarray) -> float:
    """Total angle swept by p2 - p1 along a polyline of configurations (K, 4)."""
    v = configs[:, 2:4] - configs[:, 0:2]
    ang = np.arctan2(v[:, 1], v[:, 0])
    return float(np.sum(_wrap(np.diff(ang))))


def _leg_min_distance(configs: np.ndarray) -> float:
    """Smallest |p2 - p1| along the linear pieces of a configuration polyline."""
    v = configs[:, 2:4] - configs[:, 0:2]
    a, b = v[:-1], v[1:]
    dv = b - a
    den = np.einsum("ij,ij->i", dv, dv)
    s = np.where(den > 0, np.clip(-np.einsum("ij,ij->i", a, dv) / np.where(den > 0, den, 1), 0, 1), 0)
    p = a + s[:, None] * dv
    return float(np.min(np.hypot(p[:, 0], p[:, 1]))) if len(p) else float(np.hypot(*v[0]))


def _integral_half_turns(total: float, what: str) -> int:
    k = total / math.pi
    kr = round(k)
    if abs(k - kr) > WINDING_TOL:
        raise TracingError("non_integral_winding", f"{what}: {k:.6f} half turns")
    return int(kr)


def segment_braid(path1: np.ndarray, path2: np.ndarray, base: BaseGeometry | None = None) -> int:
    """Half-twist count of two chart paths closed by simultaneous base legs."""
    base, zb = _base_points(base)
    p1 = np.asarray(path1, float)
    p2 = np.asarray(path2, float)
    if p1.shape != p2.shape:
        raise ConfigurationError("paths must be sampled on a common time grid")
    if np.any(np.abs(p1[:, 0]) > HALF) or np.any(np.abs(p2[:, 0]) > HALF):
        raise ConfigurationError("paths must stay in the chart")
    body = np.hstack([p1, p2])
    bc = np.concatenate([zb[0], zb[1]])[None, :]
    swapped = np.concatenate([zb[1], zb[0]])[None, :]
    # exchanged endpoints close up on the swapped base configuration
    tail = swapped if np.allclose(body[-1], swapped[0], atol=1e-9) else bc
    configs = np.vstack([bc, body, tail])
    if _leg_min_distance(configs) <= LEG_TOL:
        raise TracingError("collision", "segment closure")
    return _integral_half_turns(relative_winding(configs), "segment")


# ---------------------------------------------------------------------------
# trajectory sources

class _IsotopySource:
    def __init__(self, iso: Isotopy, z: np.ndarray):
        self.iso = iso
        self.z = z

    def __call__(self, t):
        t = np.asarray(t, float)
        x1, y1 = self.iso.lift_map(t, np.full(t.shape, self.z[0, 0]), np.full(t.shape, self.z[0, 1]))
        x2, y2 = self.iso.lift_map(t, np.full(t.shape, self.z[1, 0]), np.full(t.shape, self.z[1, 1]))
        return np.stack([x1, y1, x2, y2], axis=-1)

    def strand_x(self, t, strand):
        t = np.asarray(t, float)
        p = self.z[strand - 1]
        return self.iso.lift_map(t, np.full(t.shape, p[0]), np.full(t.shape, p[1]))[0]

    knots = None


class _PathSource:
    """Strand ``strand`` follows a cover polyline by arc length; the other sits still."""

    def __init__(self, lift: np.ndarray, u: np.ndarray, strand: int):
        self.lift = lift
        seg = np.hypot(*np.diff(lift, axis=0).T)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        self.s = s / s[-1] if s[-1] > 0 else np.linspace(0, 1, len(lift))
        self.u = u
        self.strand = strand
        self.knots = self.s

    def __call__(self, t):
        t = np.asarray(t, float)
        x = np.interp(t, self.s, self.lift[:, 0])
        y = np.interp(t, self.s, self.lift[:, 1])
        ux = np.full(t.shape, self.u[0])
        uy = np.full(t.shape, self.u[1])
        if self.strand == 1:
            return np.stack([x, y, ux, uy], axis=-1)
        return np.stack([ux, uy, x, y], axis=-1)

    def strand_x(self, t, strand):
        t = np.asarray(t, float)
        if strand == self.strand:
            return np.interp(t, self.s, self.lift[:, 0])
        return np.full(t.shape, self.u[0])


class _OrbitSource:
    """Strand ``strand`` follows the isotopy orbit of p; the other sits at u."""

    def __init__(self, iso: Isotopy, p: np.ndarray, u: np.ndarray, strand: int):
        self.iso = iso
        self.p = p
        self.u = u
        self.strand = strand

    knots = None

    def strand_x(self, t, strand):
        t = np.asarray(t, float)
        if strand == self.strand:
            return self.iso.lift_map(t, np.full(t.shape, self.p[0]), np.full(t.shape, self.p[1]))[0]
        return np.full(t.shape, self.u[0])

    def __call__(self, t):
        t = np.asarray(t, float)
        x, y = self.iso.lift_map(t, np.full(t.shape, self.p[0]), np.full(t.shape, self.p[1]))
        ux = np.full(t.shape, self.u[0])
        uy = np.full(t.shape, self.u[1])
        if self.strand == 1:
            return np.stack([x, y, ux, uy], axis=-1)
        return np.stack([ux, uy, x, y], axis=-1)


def _windows(xs: np.ndarray) -> np.ndarray:
    n = np.floor(xs + HALF).astype(np.int64)
    on = np.isclose(xs + HALF, np.round(xs + HALF), atol=1e-13, rtol=0)
    if len(n) > 1:
        if on[0]:
            n[0] = n[1] if not on[1] else n[0]
        if on[-1]:
            n[-1] = n[-2]
    return n


def _canon(x, y, n):
    s = np.where(np.asarray(n) % 2 == 0, 1.0, -1.0)
    return x - n, s * y


def _sample(source, n0: int = 33, tol: float = COLLISION_TOL):
    T = np.linspace(0.0, 1.0, n0)
    if source.knots is not None:
        T = np.union1d(T, source.knots)
    P = source(T)
    refinements = 0
    while True:
        d1 = np.hypot(np.diff(P[:, 0]), np.diff(P[:, 1]))
        d2 = np.hypot(np.diff(P[:, 2]), np.diff(P[:, 3]))
        c1x, c1y, _ = _canon_auto(P[:, 0], P[:, 1])
        c2x, c2y, _ = _canon_auto(P[:, 2], P[:, 3])
        rel = distance_arrays(c1x, c1y, c2x, c2y)
        if rel.min() <= tol:
            raise TracingError("collision", "strands meet along the trajectory")
        bad = ((d1 + d2) > 0.3 * np.minimum(rel[:-1], rel[1:])) | (np.maximum(d1, d2) > MAX_STEP)
        if not bad.any():
            return T, P, refinements
        idx = np.nonzero(bad)[0]
        if np.min(T[idx + 1] - T[idx]) < 1e-13 or len(T) + idx.size > MAX_SAMPLES:
            raise TracingError("refinement_limit")
        tm = 0.5 * (T[idx] + T[idx + 1])
        Pm = source(tm)
        T = np.insert(T, idx + 1, tm)
        P = np.insert(P, idx + 1, Pm, axis=0)
        refinements += 1


def _canon_auto(x, y):
    n = np.floor(np.asarray(x) + HALF).astype(np.int64)
    cx, cy = _canon(np.asarray(x), np.asarray(y), n)
    return cx, cy, n


def _find_events(source, T, P):
    """Crossing times by vectorised root bracketing; returns a time-sorted list of dicts."""
    found = []
    for strand, col in ((1, 0), (2, 2)):
        n = _windows(P[:, col])
        jumps = np.nonzero(np.diff(n))[0]
        if jumps.size == 0:
            continue
        if np.any(np.abs(np.diff(n))[jumps] > 1):
            raise TracingError("window_skip")
        up = n[jumps + 1] > n[jumps]
        sgn = np.where(up, 1.0, -1.0)
        bnd = np.where(up, n[jumps + 1], n[jumps]) - HALF
        lo, hi = T[jumps].copy(), T[jumps + 1].copy()
        glo = sgn * (P[jumps, col] - bnd)
        ghi = sgn * (P[jumps + 1, col] - bnd)
        side = np.zeros(jumps.size, dtype=int)
        g_at_hi = ghi.copy()
        # Illinois regula falsi on the bracket [lo, hi] with glo < 0 <= ghi
        for _ in range(80):
            if np.all((hi - lo < 1e-13) | (g_at_hi < 1e-13)):
                break
            mid = (lo * ghi - hi * glo) / (ghi - glo)
            bad = ~np.isfinite(mid) | (mid <= lo) | (mid >= hi)
            mid = np.where(bad, 0.5 * (lo + hi), mid)
            gm = sgn * (source.strand_x(mid, strand) - bnd)
            past = gm >= 0
            hi = np.where(past, mid, hi)
            g_at_hi = np.where(past, gm, g_at_hi)
            ghi = np.where(past, gm, np.where(side == -1, 0.5 * ghi, ghi))
            lo = np.where(past, lo, mid)
            glo = np.where(past, np.where(side == 1, 0.5 * glo, glo), gm)
            side = np.where(past, 1, -1)
        for k in range(jumps.size):
            found.append({"strand": strand, "t": float(hi[k]), "up": bool(up[k]),
                          "n_before": int(n[jumps[k]]), "n_after": int(n[jumps[k] + 1])})
    found.sort(key=lambda e: e["t"])
    return found


# ---------------------------------------------------------------------------
# core compiler

def _eta_word(table: GeneratorTable, strand: int, r: float) -> BraidWord:
    return table.eta_words[(strand, 1 if r > 0 else -1)]


def _compile(source, zb: np.ndarray, table: GeneratorTable, mode: str):
    T, P, refinements = _sample(source)
    events = _find_events(source, T, P)
    for a, b in zip(events[:-1], events[1:]):
        if b["t"] - a["t"] < 1e-9:
            raise TracingError("degenerate_crossing", "two crossings within 1e-9 in time")
    ev_cfg = source(np.array([e["t"] for e in events])) if events else np.empty((0, 4))
    win = [int(_windows(P[:, 0])[0]), int(_windows(P[:, 2])[0])]
    bc = np.concatenate([zb[0], zb[1]])
    segments_cfg = []  # canonical configuration polylines per segment (body only)
    crossings = []
    t_prev, cfg_prev = 0.0, None
    for e_idx, e in enumerate(events + [None]):
        t_next = 1.0 if e is None else e["t"]
        inside = (T > t_prev) & (T < t_next)
        if e_idx == 0:
            inside |= T == 0.0
        if e is None:
            inside |= T == 1.0
        body = P[inside]
        pts = []
        if cfg_prev is not None:
            pts.append(cfg_prev)
        for row in body:
            pts.append(row)
        end_row = ev_cfg[e_idx] if e is not None else None
        if end_row is not None:
            pts.append(end_row)
        arr = np.array(pts)
        c1x, c1y = _canon(arr[:, 0], arr[:, 1], win[0])
        c2x, c2y = _canon(arr[:, 2], arr[:, 3], win[1])
        seg = np.stack([c1x, c1y, c2x, c2y], axis=1)
        if cfg_prev is not None:
            # first row is the entry point of the strand that just crossed
            i = crossings[-1]["strand"]
            seg[0, 2 * (i - 1)] = -HALF if crossings[-1]["up"] else HALF
        if e is not None:
            i = e["strand"]
            seg[-1, 2 * (i - 1)] = HALF if e["up"] else -HALF
            crossings.append(e)
            win[i - 1] = e["n_after"]
            cfg_prev = end_row
        segments_cfg.append(seg)
        t_prev = t_next

    letters = BraidWord()
    twists = []
    out_events = []
    min_leg = math.inf
    nseg = len(segments_cfg)
    for s_idx, seg in enumerate(segments_cfg):
        open_legs = _opening(seg[0], bc, mode, s_idx == 0, crossings[s_idx - 1] if s_idx else None)
        close_legs = _closing(seg[-1], bc, mode, s_idx == nseg - 1,
                              crossings[s_idx] if s_idx < nseg - 1 else None)
        configs = np.vstack([open_legs, seg, close_legs])
        min_leg = min(min_leg, _leg_min_distance(np.vstack([open_legs, seg[:1]])),
                      _leg_min_distance(np.vstack([seg[-1:], close_legs])))
        k = _integral_half_turns(relative_winding(configs), f"segment {s_idx}")
        twists.append(k)
        letters = letters * (B ** k)
        if s_idx < nseg - 1:
            e = crossings[s_idx]
            i = e["strand"]
            exit_cfg = seg[-1]
            y_exit = float(exit_cfg[2 * (i - 1) + 1])
            side = "left" if e["up"] else "right"
            sign = 1 if e["up"] else -1
            r = y_exit if e["up"] else -y_exit
            if abs(r) < 1e-12:
                raise TracingError("degenerate_crossing", "crossing at the height of a base point")
            eta0 = _eta_word(table, i, r)
            entry_cfg = segments_cfg[s_idx + 1][0]
            a, b = _eta_conjugation(exit_cfg, entry_cfg, bc, i)
            if mode == "sequential":
                J = eta0 ** sign
            else:
                J = (A ** a) * (eta0 ** sign) * (A ** b)
            cls = (a, b) if sign > 0 else (-b, -a)
            letters = letters * J
            out_events.append(CrossingEvent(i, e["t"], y_exit, side, sign, r, cls))
    if min_leg <= LEG_TOL:
        raise TracingError("collision", "closure legs")
    diag = {"samples": int(len(T)), "refinement_rounds": refinements, "min_leg_distance": min_leg}
    return letters, out_events, twists, diag


def _opening(first: np.ndarray, bc: np.ndarray, mode: str, initial: bool, crossing) -> np.ndarray:
    if initial or mode == "simultaneous":
        return bc[None, :]
    i = crossing["strand"]
    mid = bc.copy()
    mid[2 * (i - 1): 2 * (i - 1) + 2] = first[2 * (i - 1): 2 * (i - 1) + 2]
    return np.vstack([bc, mid])


def _closing(last: np.ndarray, bc: np.ndarray, mode: str, final: bool, crossing) -> np.ndarray:
    if final or mode == "simultaneous":
        return bc[None, :]
    i = crossing["strand"]
    mid = bc.copy()
    mid[2 * (i - 1): 2 * (i - 1) + 2] = last[2 * (i - 1): 2 * (i - 1) + 2]
    return np.vstack([mid, bc])


def _eta_conjugation(exit_cfg, entry_cfg, bc, i) -> tuple:
    """A-exponents (a, b) of the planar loops around a cut passage (see module doc)."""
    sl_i = slice(2 * (i - 1), 2 * (i - 1) + 2)
    q_exit_base = bc.copy()
    q_exit_base[sl_i] = exit_cfg[sl_i]
    w1 = np.vstack([bc, exit_cfg, q_exit_base, bc])
    q_entry_base = bc.copy()
    q_entry_base[sl_i] = entry_cfg[sl_i]
    w2 = np.vstack([bc, q_entry_base, entry_cfg, bc])
    if _leg_min_distance(w1) <= LEG_TOL or _leg_min_distance(w2) <= LEG_TOL:
        raise TracingError("collision", "legs at a crossing")
    ka = _integral_half_turns(relative_winding(w1), "eta prefix")
    kb = _integral_half_turns(relative_winding(w2), "eta suffix")
    return ka // 2, kb // 2


def _perturbations(z: np.ndarray, seed: int, attempts: int):
    yield z
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        d = rng.normal(size=(2, 2))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        yield z + PERTURBATION * d


def _as_array(z) -> np.ndarray:
    return np.array([[p.x, p.y] for p in z], float)


def trace(f: Isotopy, z: Sequence[BandPoint], base: BaseGeometry | None = None,
          table: GeneratorTable | None = None, mode: str = "sequential", seed: int = 0,
          retries: int = 3) -> ExtractionReport:
    """Braid of the orbit of z under f, closed by straight legs to the base."""
    if mode not in ("sequential", "simultaneous"):
        raise ConfigurationError(f"unknown closure mode {mode!r}")
    base, zb = _base_points(base)
    table = table or default_table(base)
    last_err = None
    for attempt, za in enumerate(_perturbations(_as_array(z), seed, retries)):
        zp = [band_point(*row) for row in za]
        start = check_omega4(zp, base)
        if not start.ok:
            raise TracingError("not_in_omega", f"start configuration: {start.reason}")
        X1, Y1 = f.lift_map(1.0, za[:, 0], za[:, 1])
        img = [band_point(float(x), float(y)) for x, y in zip(X1, Y1)]
        end = check_omega4(img, base)
        if not end.ok:
            raise TracingError("not_in_omega", f"image configuration: {end.reason}")
        try:
            word, events, twists, diag = _compile(_IsotopySource(f, za), zb, table, mode)
        except TracingError as exc:
            last_err = exc
            continue
        diag["perturbation_attempts"] = attempt
        return ExtractionReport(word, events, twists, {"start": start, "end": end}, mode, diag,
                                tuple(zp))
    raise TracingError("tracing_failed", f"after {retries} perturbations: {last_err}")


def trace_word(f: Isotopy, z, **kw) -> BraidWord:
    return trace(f, z, **kw).word


def beta_braid(path, u: BandPoint, strand: int, base: BaseGeometry | None = None,
               table: GeneratorTable | None = None, mode: str = "simultaneous",
               seed: int = 0, retries: int = 3) -> ExtractionReport:
    """Braid of one strand following ``path`` while the other waits at u.

    ``path`` is a sequence of chart points (or BandPoints); it may start and end
    on the branch cut, in which case the closing legs run to the matching side.
    """
    base, zb = _base_points(base)
    table = table or default_table(base)
    pts = np.array([[p.x, p.y] if isinstance(p, BandPoint) else p for p in path], float)
    if len(pts) == 1:
        pts = np.vstack([pts, pts])
    lift = unwrap_polyline(pts, closed=False)
    rng = np.random.default_rng(seed)
    u0 = np.array([u.x, u.y], float)
    last_err = None
    for attempt in range(retries + 1):
        uu = u0 if attempt == 0 else u0 + PERTURBATION * rng.normal(size=2)
        try:
            word, events, twists, diag = _compile(_PathSource(lift, uu, strand), zb, table, mode)
        except TracingError as exc:
            last_err = exc
            continue
        diag["perturbation_attempts"] = attempt
        return ExtractionReport(word, events, twists, {}, mode, diag)
    raise TracingError("tracing_failed", f"beta extraction: {last_err}")


def orbit_beta(f: Isotopy, p: BandPoint, u: BandPoint, strand: int,
               base: BaseGeometry | None = None, table: GeneratorTable | None = None,
               mode: str = "simultaneous") -> ExtractionReport:
    """One-strand braid of the orbit of p under f while the other strand waits at u."""
    base, zb = _base_points(base)
    table = table or default_table(base)
    src = _OrbitSource(f, np.array([p.x, p.y]), np.array([u.x, u.y]), strand)
    word, events, twists, diag = _compile(src, zb, table, mode)
    return ExtractionReport(word, events, twists, {}, mode, diag)


# ---------------------------------------------------------------------------
# eta table views

def eta_table(table: GeneratorTable | None = None) -> dict:
    """The elementary crossing words keyed by (strand, sign of exit height, side).

    A left-side exit at height y is eta(q)^+1 with q = pi(1/2, y); a right-side
    exit at height y is eta(q)^-1 with q = pi(1/2, -y).
    """
    table = table or default_table()
    out = {}
    for strand in (1, 2):
        for sy in (1, -1):
            out[(strand, sy, "left")] = table.eta_words[(strand, sy)]
            out[(strand, sy, "right")] = table.eta_words[(strand, -sy)].inverse()
    return out


def eta_lookup(event: CrossingEvent, table: GeneratorTable | None = None,
               classes: dict | None = None) -> BraidWord:
    """Crossing braid of one event, eta(q, v)^sign.

    With ``classes`` (from ``derive_eta_classes``) the event's conjugation
    class is used; otherwise the base-position word for its height.
    """
    table = table or default_table()
    if not table.eta_words:
        raise ConfigurationError("eta table missing")
    sr = 1 if event.r > 0 else -1
    if classes is not None and event.eta_class is not None:
        word = classes[(event.strand, class_index(sr, event.eta_class))]
    else:
        word = table.eta_words[(event.strand, sr)]
        if event.eta_class is not None:
            a, b = event.eta_class
            word = (A ** a) * word * (A ** b)
    return word ** event.sign


def class_index(sign_r: int, ab: tuple) -> int:
    """1, 2 for the base-position classes (r > 0, r < 0); 3, 4 for their A-conjugates."""
    base_idx = 1 if sign_r > 0 else 2
    return base_idx if ab == (0, 0) else base_idx + 2


def derive_eta_classes(n: int = 400, seed: int = 0, table: GeneratorTable | None = None,
                       base: BaseGeometry | None = None) -> dict:
    """Sample cut passages with the other strand anywhere in the chart and record
    the distinct eta(q, v) words per (strand, class index)."""
    base, zb = _base_points(base)
    table = table or default_table(base)
    rng = np.random.default_rng(seed)
    bc = np.concatenate([zb[0], zb[1]])
    seen: dict = {}
    for _ in range(n):
        i = int(rng.integers(1, 3))
        r = float(rng.uniform(-0.45, 0.45))
        v = rng.uniform(-0.45, 0.45, size=2)
        exit_cfg = bc.copy()
        entry_cfg = bc.copy()
        si = slice(2 * (i - 1), 2 * (i - 1) + 2)
        sj = slice(2 * (2 - i), 2 * (2 - i) + 2)
        exit_cfg[si] = (HALF, r)
        entry_cfg[si] = (-HALF, -r)
        exit_cfg[sj] = v
        entry_cfg[sj] = v
        try:
            a, b = _eta_conjugation(exit_cfg, entry_cfg, bc, i)
        except TracingError:
            continue
        sr = 1 if r > 0 else -1
        word = (A ** a) * table.eta_words[(i, sr)] * (A ** b)
        key = (i, class_index(sr, (a, b)))
        bucket = seen.setdefault(key, [])
        if not any(equal(word, w, table) for w in bucket):
            bucket.append(word)
    return seen


# ---------------------------------------------------------------------------
# conjugacy search

@dataclass
class ConjugacyResult:
    found: object  # True or Unknown
    conjugator: BraidWord | None = None


def conjugate_in_P2(w1: BraidWord, w2: BraidWord, radius: int = 4, pure_only: bool = True,
                    table: GeneratorTable | None = None) -> ConjugacyResult:
    """Search c with c w1 c^-1 = w2 among conjugators of length <= radius."""
    table = table or default_table()
    if equal(w1, w2, table):
        return ConjugacyResult(True, IDENTITY)
    for c in word_ball(radius):
        if pure_only and not is_pure(c):
            continue
        if equal(c * w1 * c.inverse(), w2, table):
            return ConjugacyResult(True, c)
    return ConjugacyResult(Unknown(radius), None)


# ---------------------------------------------------------------------------
# norm bookkeeping

def eta_cost(word: BraidWord) -> int:
    """Conjugation-generated length bound of an elementary crossing word."""
    return 1 if _is_conjugate_of_generator(word) else len(word)


def factorization_bound(report: ExtractionReport, table: GeneratorTable | None = None) -> int:
    """Upper bound on the conjugation-generated norm read off the factorization."""
    table = table or default_table()
    total = sum(abs(k) for k in report.segment_twists)
    for e in report.events:
        sr = 1 if e.r > 0 else -1
        total += eta_cost(table.eta_words[(e.strand, sr)])
        if report.mode == "simultaneous" and e.eta_class is not None:
            total += 2 * (abs(e.eta_class[0]) + abs(e.eta_class[1]))
    return total


def crossing_oracle(report: ExtractionReport) -> tuple:
    """(h1, h2) of the traced word next to the signed cut-crossing counts."""
    return strand_degrees(report.word), report.crossing_counts()
