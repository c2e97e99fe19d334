"""Monte-Carlo integration of quasimorphism values of traced braids.

Configurations are drawn uniformly from the unit-area chart squared. Samples
are produced in fixed-size blocks, each with its own child seed, so the
sample stream depends only on (seed, n) and not on the worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import multiprocessing as mp

import numpy as np

from .band_geometry import HALF, band_point
from .braid_core import (
    GeneratorTable,
    QuasimorphismSpec,
    default_table,
    evaluate,
    make_quasimorphism,
)
from .braid_tracer import check_omega4, eta_cost, factorization_bound, trace
from .errors import ConfigurationError, TracingError
from .isotopy_engine import (
    BaseGeometry,
    Composite,
    DiskSlide,
    GraphSlide,
    Inverse,
    IdentityIsotopy,
    Isotopy,
    catalog_curve,
    contraction_map,
    flat_curve,
    power,
    region_decomposition,
    supported_twist,
)

BLOCK = 250
MAX_REJECT_FRACTION = 0.01


@dataclass
class SampleSet:
    z: np.ndarray  # (n, 2, 2) accepted configurations
    words: list
    bounds: np.ndarray  # factorization-length bound per sample
    n_rejected: int
    rejections: dict
    seed: int


@dataclass
class McEstimate:
    mean: float
    stderr: float
    n_samples: int
    n_rejected: int
    seed: int
    rejections: dict = field(default_factory=dict)
    flagged: bool = False

    def agrees_with(self, value: float, k: float = 3.0) -> bool:
        return abs(self.mean - value) <= k * self.stderr + 1e-12

    def to_record(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n_samples": self.n_samples,
                "n_rejected": self.n_rejected, "seed": self.seed,
                "rejections": dict(self.rejections), "flagged": self.flagged}


def _stats(values: np.ndarray, samples: SampleSet) -> McEstimate:
    n = len(values)
    mean = float(math.fsum(values) / n) if n else float("nan")
    sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
    total = n + samples.n_rejected
    flagged = total > 0 and samples.n_rejected / total > MAX_REJECT_FRACTION
    return McEstimate(mean, sd / math.sqrt(n) if n else float("nan"), n, samples.n_rejected,
                      samples.seed, dict(samples.rejections), flagged)


# ---------------------------------------------------------------------------
# sampling

_JOB: dict = {}


def _run_block(args):
    child, quota = args
    f, base, table, mode = _JOB["f"], _JOB["base"], _JOB["table"], _JOB["mode"]
    rng = np.random.default_rng(child)
    zs, words, bounds = [], [], []
    rejected: dict = {}
    attempts = 0
    while len(words) < quota:
        attempts += 1
        if attempts > 2 * quota + 20:
            break
        z = rng.uniform(-HALF, HALF, size=(2, 2))
        pts = [band_point(*z[0]), band_point(*z[1])]
        try:
            rep = trace(f, pts, base=base, table=table, mode=mode,
                        seed=int(rng.integers(2**31)))
        except TracingError as exc:
            rejected[exc.reason] = rejected.get(exc.reason, 0) + 1
            continue
        zs.append(z)
        words.append(rep.word)
        bounds.append(factorization_bound(rep, table))
    return zs, words, bounds, rejected


def default_workers() -> int:
    return int(os.environ.get("MOBIUS_GG_WORKERS", "1"))


def sample_words(f: Isotopy, n: int, seed: int = 0, workers: int | None = None,
                 base: BaseGeometry | None = None, table: GeneratorTable | None = None,
                 mode: str = "sequential") -> SampleSet:
    """Trace f at n accepted uniform configurations."""
    if n <= 0:
        raise ConfigurationError("sample count must be positive")
    base = base or BaseGeometry()
    table = table or default_table(base)
    workers = workers or default_workers()
    nblocks = -(-n // BLOCK)
    children = np.random.SeedSequence(seed).spawn(nblocks)
    quotas = [BLOCK] * (nblocks - 1) + [n - BLOCK * (nblocks - 1)]
    _JOB.update(f=f, base=base, table=table, mode=mode)
    jobs = list(zip(children, quotas))
    if workers > 1 and nblocks > 1:
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
            results = list(ex.map(_run_block, jobs))
    else:
        results = [_run_block(j) for j in jobs]
    zs, words, bounds, rejected = [], [], [], {}
    for bz, bw, bb, br in results:
        zs.extend(bz)
        words.extend(bw)
        bounds.extend(bb)
        for k, v in br.items():
            rejected[k] = rejected.get(k, 0) + v
    return SampleSet(np.array(zs).reshape(-1, 2, 2), words, np.array(bounds, dtype=np.int64),
                     sum(rejected.values()), rejected, seed)


def phi_values(phi: QuasimorphismSpec, samples: SampleSet,
               table: GeneratorTable | None = None) -> np.ndarray:
    return np.array([evaluate(phi, w, table) for w in samples.words], float)


def mc_estimate(phi: QuasimorphismSpec, f: Isotopy, n: int, seed: int = 0,
                workers: int | None = None, base: BaseGeometry | None = None,
                table: GeneratorTable | None = None) -> McEstimate:
    """Mean of phi(trace(f, z)) over n accepted uniform configurations."""
    samples = sample_words(f, n, seed, workers, base, table)
    return _stats(phi_values(phi, samples, table), samples)


# ---------------------------------------------------------------------------
# homogenization

@dataclass
class HomogenizedEstimate:
    estimates: list  # McEstimate of G(f^p)/p for p = 1..p_max
    value: float
    max_spread_sigma: float  # largest |e_p - e_1| in units of the combined stderr

    def constant_in_p(self, k: float = 3.0) -> bool:
        return self.max_spread_sigma <= k


def homogenized_estimate(phi: QuasimorphismSpec, f: Isotopy, p_max: int, n: int, seed: int = 0,
                         workers: int | None = None, base: BaseGeometry | None = None,
                         table: GeneratorTable | None = None) -> HomogenizedEstimate:
    """G(phi)(f^p)/p for p = 1..p_max on common random configurations."""
    if p_max < 1:
        raise ConfigurationError("p_max must be at least 1")
    ests = []
    for p in range(1, p_max + 1):
        e = mc_estimate(phi, f if p == 1 else power(f, p), n, seed, workers, base, table)
        ests.append(McEstimate(e.mean / p, e.stderr / p, e.n_samples, e.n_rejected, e.seed,
                               e.rejections, e.flagged))
    spread = 0.0
    e1 = ests[0]
    for e in ests[1:]:
        s = math.hypot(e.stderr, e1.stderr)
        diff = abs(e.mean - e1.mean)
        spread = max(spread, diff / s if s > 0 else (0.0 if diff < 1e-12 else math.inf))
    return HomogenizedEstimate(ests, ests[-1].mean, spread)


# ---------------------------------------------------------------------------
# flux oracles

def deck_flux_quadrature(f: Isotopy, grid: int = 600) -> float:
    """Mean deck index of f_1(z) over a midpoint grid of the chart.

    The signed cut-crossing count of a strand equals the deck index of its
    endpoint lift, so twice this number is the expected h-sum.
    """
    c = (np.arange(grid) + 0.5) / grid - HALF
    X, Y = np.meshgrid(c, c, indexing="ij")
    x1, _ = f.lift_map(1.0, X.ravel(), Y.ravel())
    n = np.floor(x1 + HALF)
    return 2.0 * float(n.mean())


def band_flux(f: Isotopy, grid: int = 200_001) -> float:
    """2 * laps * integral of the slide profile across the band (trapezoid rule)."""
    if isinstance(f, GraphSlide):
        if f.kind != "mobius":
            raise ConfigurationError("closed-form flux covers Mobius-kind slides")
        v = np.linspace(-HALF, HALF, grid)
        return 2.0 * f.laps * float(np.trapezoid(f.bump(v), v))
    if isinstance(f, DiskSlide) or isinstance(f, IdentityIsotopy):
        return 0.0
    if isinstance(f, Composite):
        return sum(band_flux(p, grid) for p in f.pieces)
    if isinstance(f, Inverse):
        return -band_flux(f.iso, grid)
    raise ConfigurationError(f"no closed-form flux for {type(f).__name__}")


# ---------------------------------------------------------------------------
# injectivity experiment

@dataclass
class InjectivityConfig:
    a1: float = 0.5
    a2: float = 0.5
    eps: float = 1.0 / 16
    b1: float = 0.3
    b2: float = 0.3
    curve: str = "c_boundary"
    phi: str = "hsum"
    n: int = 10_000
    seed: int = 0
    workers: int | None = None


@dataclass
class InjectivityReport:
    parameters: dict
    phi: dict
    phi_matrix: list
    core_term: float
    remainder_bound: float
    K: int
    M: float
    defect: float
    restricted: McEstimate
    full: McEstimate
    verdict: str
    valid: bool = True
    notes: list = field(default_factory=list)

    def to_record(self) -> dict:
        return {"parameters": self.parameters, "phi": self.phi, "phi_matrix": self.phi_matrix,
                "core_term": self.core_term, "remainder_bound": self.remainder_bound,
                "K": self.K, "M": self.M, "defect": self.defect,
                "restricted": self.restricted.to_record(), "full": self.full.to_record(),
                "verdict": self.verdict, "valid": self.valid, "notes": self.notes}


def _regions(b1: float, b2: float):
    """U1 = [-1/2, 0) x [-b1, b1), U2 = [0, 1/2) x [-b2, b2); areas b1 and b2."""
    def inside(z, i):
        b = b1 if i == 1 else b2
        xs = (z[..., 0] < 0) if i == 1 else (z[..., 0] >= 0)
        return xs & (np.abs(z[..., 1]) < b)
    return inside


def _probe_pairs(i: int, j: int, bs: tuple):
    """Deterministic candidate configurations in V_i x V_j, in a fixed order."""
    xs = {1: (-0.375, -0.125), 2: (0.125, 0.375)}
    for fy in (1.0 / 3, -1.0 / 3, 2.0 / 3, -2.0 / 3):
        for x1 in xs[i]:
            for x2 in xs[j]:
                if x1 == x2:
                    continue
                yield (band_point(x1, fy * bs[i - 1]), band_point(x2, -fy * bs[j - 1] / 2))


def _generator_max(phi: QuasimorphismSpec, table: GeneratorTable) -> float:
    from .braid_core import A, B, R2, R3
    vals = [abs(evaluate(phi, w ** s, table)) for w in (B, R2, R3, A) for s in (1, -1)]
    return max(vals)


def injectivity_experiment(config: InjectivityConfig | None = None,
                           table: GeneratorTable | None = None) -> InjectivityReport:
    cfg = config or InjectivityConfig()
    base = BaseGeometry()
    table = table or default_table(base)
    dec = region_decomposition(cfg.a1, cfg.a2, cfg.eps)
    g = supported_twist(catalog_curve(cfg.curve, dec))
    return injectivity_experiment_for(g, cfg, table)


def injectivity_experiment_for(g: Isotopy, cfg: InjectivityConfig,
                               table: GeneratorTable | None = None) -> InjectivityReport:
    """Core term from probe traces, remainder bound, and MC estimates for the map g."""
    base = BaseGeometry()
    table = table or default_table(base)
    phi = make_quasimorphism(cfg.phi, table)
    notes = []
    if isinstance(g, GraphSlide):
        plateau = g.w - g.d
        if max(cfg.b1, cfg.b2) > plateau:
            raise ConfigurationError(
                f"regions of half-height {max(cfg.b1, cfg.b2):g} leave the plateau ({plateau:g})")
    elif not isinstance(g, IdentityIsotopy):
        notes.append("plateau coverage of U not checked for this map")
    bs = (cfg.b1, cfg.b2)
    mat = [[0.0, 0.0], [0.0, 0.0]]
    valid = True
    for i in (1, 2):
        for j in (1, 2):
            done = False
            for p, q in _probe_pairs(i, j, bs):
                if not check_omega4([p, q], base).ok:
                    continue
                try:
                    rep = trace(g, [p, q], base=base, table=table)
                except TracingError as exc:
                    notes.append(f"probe ({i},{j}) at {p}, {q} skipped: {exc}")
                    continue
                mat[i - 1][j - 1] = evaluate(phi, rep.word, table)
                done = True
                break
            if not done:
                valid = False
                notes.append(f"no traceable probe in V{i} x V{j}")
    F = sum(mat[i][j] * bs[i] * bs[j] for i in range(2) for j in range(2))
    samples = sample_words(g, cfg.n, cfg.seed, cfg.workers, base, table)
    vals = phi_values(phi, samples, table)
    inside = _regions(*bs)
    inU = inside(samples.z[:, 0], 1) | inside(samples.z[:, 0], 2)
    inU &= inside(samples.z[:, 1], 1) | inside(samples.z[:, 1], 2)
    restricted = _stats(vals * inU, samples)
    full = _stats(vals, samples)
    K = int(samples.bounds[~inU].max()) if (~inU).any() else 0
    M = _generator_max(phi, table)
    D = phi.defect
    remainder = K * (M + D) * (1.0 - (cfg.b1 + cfg.b2) ** 2)
    nonzero = abs(F) > remainder + 3.0 * full.stderr
    verdict = "nonzero" if nonzero else "inconclusive"
    if all(v == 0 for row in mat for v in row) and full.mean == 0.0:
        verdict = "zero"
    notes.append("K is the largest factorization bound observed outside X2(U) (empirical)")
    if not phi.is_homomorphism:
        notes.append("defect is empirical")
    return InjectivityReport(
        {"a1": cfg.a1, "a2": cfg.a2, "eps": cfg.eps, "b1": cfg.b1, "b2": cfg.b2,
         "curve": cfg.curve, "n": cfg.n, "seed": cfg.seed},
        {"kind": phi.kind, "target": list(phi.target), "defect": phi.defect},
        mat, F, remainder, K, M, D, restricted, full, verdict, valid, notes)


# ---------------------------------------------------------------------------
# uniform norm survey across contraction levels

@dataclass
class SurveyLevel:
    level: int
    height: float
    n_samples: int
    max_bound: int
    mean_bound: float
    formula: float
    failures: dict


def formula_bound(n_k: int, N: int, C: float) -> float:
    return 2.0 * (2 * n_k * N + 2 * n_k + 9 * N + 6 + C)


def base_word_constant(table: GeneratorTable | None = None) -> int:
    table = table or default_table()
    return max(eta_cost(w) for w in table.eta_words.values())


def level_twist(curve_name: str, level: int, a1: float = 0.5, a2: float = 0.5,
                eps: float = 1.0 / 16) -> tuple:
    """Twist along the image of a catalog curve under the level-th contraction power."""
    L, _, phi_y = contraction_map(a1, a2, eps)
    curve = catalog_curve(curve_name, region_decomposition(a1, a2, eps))
    if curve.side != "mobius":
        raise ConfigurationError("contraction levels are defined for core-parallel curves")
    h = float(curve.params["height"])
    for _ in range(level):
        h = float(phi_y(h))
    level_curve = flat_curve(h, name=f"{curve_name}@L{level}")
    return supported_twist(level_curve), h, curve


def norm_survey(curve_name: str = "c_boundary", n_levels: int = 3, samples: int = 500,
                seed: int = 0, workers: int | None = None,
                table: GeneratorTable | None = None) -> list:
    base = BaseGeometry()
    table = table or default_table(base)
    C = base_word_constant(table)
    out = []
    for i in range(1, n_levels + 1):
        f, h, curve = level_twist(curve_name, i)
        s = sample_words(f, samples, seed, workers, base, table)
        out.append(SurveyLevel(i, h, len(s.words), int(s.bounds.max()), float(s.bounds.mean()),
                               formula_bound(curve.n_c, curve.N, C), dict(s.rejections)))
    return out


def finiteness_check(f: Isotopy, n: int = 1000, seed: int = 0, workers: int | None = None,
                     table: GeneratorTable | None = None) -> dict:
    """Max factorization bound on n samples and on 2n samples (the first n shared)."""
    s2 = sample_words(f, 2 * n, seed, workers, table=table)
    first = s2.bounds[:n]
    return {"max_n": int(first.max()), "max_2n": int(s2.bounds.max()),
            "histogram": np.bincount(s2.bounds).tolist(), "rejected": s2.n_rejected}
