"""Command line entry point for batch experiments.

Configurations are JSON files; anything omitted falls back to the defaults
shown by ``--print-defaults``. Every run writes ``summary.json`` into the
output directory; sampling commands also write CSV detail files.
"""
from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .band_geometry import band_point
from .braid_core import default_table, derive_generator_table, equal, make_quasimorphism, strand_degrees
from .braid_tracer import trace
from .errors import ConfigurationError, DerivationError, TracingError
from .gg_integrator import (
    InjectivityConfig,
    band_flux,
    homogenized_estimate,
    injectivity_experiment,
    norm_survey,
    phi_values,
    sample_words,
    _stats,
)
from .isotopy_engine import (
    BaseGeometry,
    CATALOG,
    IdentityIsotopy,
    band_slide,
    catalog_curve,
    compose,
    density_check,
    disk_slide,
    generator_isotopies,
    invert,
    power,
    region_decomposition,
    supported_twist,
    trajectory_csv,
)

log = logging.getLogger("mobius_gg")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DERIVATION = 3
EXIT_FLAGGED = 4
EXIT_TRACING = 5

COMMANDS = ("trace", "estimate", "homogenize", "injectivity", "norm-survey", "derive-table",
            "validate")

DEFAULTS = {
    "command": "estimate",
    "geometry": {"a1": 0.5, "a2": 0.5, "eps": 0.0625, "base": [-0.25, 0.25]},
    "isotopy": [{"kind": "twist", "curve": "c_core_nbhd", "exponent": 1, "xi": None, "d": None}],
    "phi": {"kind": "hsum", "target": []},
    "sampling": {"n": 2000, "p_max": 4, "seed": 0, "workers": None},
    "trace": {"z": [[-0.25, 0.0], [0.25, 0.0]], "mode": "sequential"},
    "injectivity": {"curve": "c_boundary", "b1": 0.45, "b2": 0.45},
    "survey": {"curve": "c_boundary", "levels": 3, "samples": 500},
    "validate": {"samples": 20},
}

UNITS = {
    "geometry": "chart units; the band has width 1 and area 1",
    "sampling.n": "accepted configurations per estimate",
    "sampling.workers": "processes; null reads MOBIUS_GG_WORKERS (default 1)",
    "injectivity.b1/b2": "areas of the two plateau regions",
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(user: dict | None) -> dict:
    cfg = _merge(DEFAULTS, user or {})
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    if cfg["command"] not in COMMANDS:
        raise ConfigurationError(f"unknown command {cfg['command']!r}")
    if not isinstance(cfg["isotopy"], list):
        raise ConfigurationError("isotopy must be a list of pieces")
    n = cfg["sampling"]["n"]
    if not isinstance(n, int) or n <= 0:
        raise ConfigurationError("sampling.n must be a positive integer")
    return cfg


def dump_config(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True)


def load_config(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object")
    return data


# ---------------------------------------------------------------------------
# building objects from the config

def build_isotopy(pieces: list, cfg: dict):
    geo = cfg["geometry"]
    base = BaseGeometry(*geo["base"])
    dec = region_decomposition(geo["a1"], geo["a2"], geo["eps"])
    built = []
    for piece in pieces:
        kind = piece.get("kind")
        if kind == "identity":
            built.append(IdentityIsotopy())
        elif kind == "twist":
            if piece.get("curve") not in CATALOG:
                raise ConfigurationError(f"unknown curve {piece.get('curve')!r}")
            built.append(supported_twist(catalog_curve(piece["curve"], dec, tuple(geo["base"])),
                                         piece.get("xi"), piece.get("d"),
                                         int(piece.get("exponent", 1))))
        elif kind == "band_slide":
            built.append(band_slide(piece["a"], piece["d"], piece.get("laps", 1.0)))
        elif kind == "disk_slide":
            built.append(disk_slide(band_point(*piece["center"]), piece["a"], piece["d"],
                                    piece.get("turns", 1.0)))
        elif kind == "generator":
            gens = generator_isotopies(base)
            if piece.get("name") not in gens:
                raise ConfigurationError(f"unknown generator {piece.get('name')!r}")
            g = gens[piece["name"]]
            built.append(power(g, int(piece.get("exponent", 1))))
        else:
            raise ConfigurationError(f"unknown isotopy kind {kind!r}")
        if piece.get("inverse"):
            built[-1] = invert(built[-1])
    if not built:
        return IdentityIsotopy()
    return built[0] if len(built) == 1 else compose(built)


def build_phi(cfg: dict, table):
    p = cfg["phi"]
    kw = {}
    if p.get("target"):
        kw["target"] = tuple(p["target"])
    try:
        return make_quasimorphism(p["kind"], table, **kw)
    except TypeError as exc:
        raise ConfigurationError(f"bad phi spec: {exc}") from exc


# ---------------------------------------------------------------------------
# output helpers

def _csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _write(out: Path, name: str, text: str):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _sample_rows(samples, values):
    rows = []
    for k, (z, w, v, b) in enumerate(zip(samples.z, samples.words, values, samples.bounds)):
        rows.append([k, f"{z[0, 0]:.17g}", f"{z[0, 1]:.17g}", f"{z[1, 0]:.17g}", f"{z[1, 1]:.17g}",
                     str(w), f"{v:.17g}", int(b)])
    return rows


SAMPLE_HEADER = ["index", "z1x", "z1y", "z2x", "z2y", "word", "value", "factor_bound"]


# ---------------------------------------------------------------------------
# commands

def _cmd_trace(cfg, out):
    base = BaseGeometry(*cfg["geometry"]["base"])
    f = build_isotopy(cfg["isotopy"], cfg)
    z = [band_point(*p) for p in cfg["trace"]["z"]]
    rep = trace(f, z, base=base, mode=cfg["trace"]["mode"], seed=cfg["sampling"]["seed"])
    traj = trajectory_csv(f, z)
    _write(out, "trajectory.csv", traj)
    return {"report": rep.to_record(), "strand_degrees": list(strand_degrees(rep.word))}, EXIT_OK


def _cmd_estimate(cfg, out):
    s = cfg["sampling"]
    base = BaseGeometry(*cfg["geometry"]["base"])
    table = default_table(base)
    f = build_isotopy(cfg["isotopy"], cfg)
    phi = build_phi(cfg, table)
    samples = sample_words(f, s["n"], s["seed"], s["workers"], base, table)
    vals = phi_values(phi, samples, table)
    est = _stats(vals, samples)
    _write(out, "samples.csv", _csv_text(SAMPLE_HEADER, _sample_rows(samples, vals)))
    res = {"estimate": est.to_record(), "phi": {"kind": phi.kind, "defect": phi.defect}}
    try:
        res["flux_oracle"] = band_flux(f)
    except ConfigurationError:  # closed form only for slides
        res["flux_oracle"] = None
    return res, EXIT_FLAGGED if est.flagged else EXIT_OK


def _cmd_homogenize(cfg, out):
    s = cfg["sampling"]
    base = BaseGeometry(*cfg["geometry"]["base"])
    table = default_table(base)
    f = build_isotopy(cfg["isotopy"], cfg)
    phi = build_phi(cfg, table)
    h = homogenized_estimate(phi, f, s["p_max"], s["n"], s["seed"], s["workers"], base, table)
    rows = [[p + 1, f"{e.mean:.17g}", f"{e.stderr:.17g}"] for p, e in enumerate(h.estimates)]
    _write(out, "homogenize.csv", _csv_text(["p", "value_over_p", "stderr"], rows))
    flagged = any(e.flagged for e in h.estimates)
    return ({"estimates": [e.to_record() for e in h.estimates], "value": h.value,
             "max_spread_sigma": h.max_spread_sigma, "constant_in_p": h.constant_in_p()},
            EXIT_FLAGGED if flagged else EXIT_OK)


def _cmd_injectivity(cfg, out):
    g, s, i = cfg["geometry"], cfg["sampling"], cfg["injectivity"]
    ic = InjectivityConfig(g["a1"], g["a2"], g["eps"], i["b1"], i["b2"], i["curve"],
                           cfg["phi"]["kind"], s["n"], s["seed"], s["workers"])
    rep = injectivity_experiment(ic)
    flagged = rep.full.flagged or not rep.valid
    return {"injectivity": rep.to_record()}, EXIT_FLAGGED if flagged else EXIT_OK


def _cmd_survey(cfg, out):
    sv, s = cfg["survey"], cfg["sampling"]
    levels = norm_survey(sv["curve"], sv["levels"], sv["samples"], s["seed"], s["workers"])
    rows = [[lv.level, f"{lv.height:.17g}", lv.n_samples, lv.max_bound, f"{lv.mean_bound:.17g}",
             f"{lv.formula:.17g}"] for lv in levels]
    _write(out, "norm_survey.csv",
           _csv_text(["level", "height", "samples", "max_bound", "mean_bound", "formula"], rows))
    maxima = [lv.max_bound for lv in levels]
    return {"levels": [lv.__dict__ for lv in levels],
            "uniform": len(set(maxima)) == 1}, EXIT_OK


def _cmd_derive(cfg, out):
    base = BaseGeometry(*cfg["geometry"]["base"])
    table = derive_generator_table(base)
    _write(out, "generator_table.json", table.to_text())
    return {"checks": table.checks}, EXIT_OK


def _cmd_validate(cfg, out):
    """Relation, density, cocycle and crossing oracles on a small sample."""
    base = BaseGeometry(*cfg["geometry"]["base"])
    table = derive_generator_table(base)
    results = {"relations": all(table.checks.values())}
    dens = {}
    isos = {c: supported_twist(catalog_curve(c)) for c in CATALOG}
    isos.update(generator_isotopies(base))
    for name, f in isos.items():
        dens[name] = density_check(f, 2000)["max_deviation"]
    results["density"] = dens
    results["density_ok"] = all(v <= 1e-6 for v in dens.values())
    rng = np.random.default_rng(cfg["sampling"]["seed"])
    g, h = isos["c_boundary"], isos["c_two_punctures"]
    gh = compose([h, g])
    ok = bad = skipped = 0
    for _ in range(cfg["validate"]["samples"]):
        z = [band_point(*rng.uniform(-0.5, 0.5, 2)) for _ in range(2)]
        try:
            w = trace(gh, z, base=base, table=table).word
            w1 = trace(h, z, base=base, table=table)
            hz = [h.eval(1.0, p) for p in z]
            w2 = trace(g, hz, base=base, table=table).word
        except TracingError:
            skipped += 1
            continue
        same = equal(w, w1.word * w2, table)
        crossing = strand_degrees(w1.word) == w1.crossing_counts()
        if same and crossing:
            ok += 1
        else:
            bad += 1
    results["cocycle"] = {"ok": ok, "failed": bad, "skipped": skipped}
    passed = results["relations"] and results["density_ok"] and bad == 0
    return results, EXIT_OK if passed else EXIT_DERIVATION


HANDLERS = {
    "trace": _cmd_trace,
    "estimate": _cmd_estimate,
    "homogenize": _cmd_homogenize,
    "injectivity": _cmd_injectivity,
    "norm-survey": _cmd_survey,
    "derive-table": _cmd_derive,
    "validate": _cmd_validate,
}


def run(cfg: dict, out: Path) -> int:
    """Execute a resolved config; always writes summary.json."""
    summary = {"version": __version__, "config": cfg, "status": "ok"}
    try:
        result, code = HANDLERS[cfg["command"]](cfg, out)
        summary["result"] = result
        if code == EXIT_FLAGGED:
            summary["status"] = "flagged"
        elif code != EXIT_OK:
            summary["status"] = "failed"
    except ConfigurationError as exc:
        summary.update(status="configuration-error", error=str(exc))
        code = EXIT_CONFIG
    except DerivationError as exc:
        summary.update(status="derivation-failure", error=str(exc))
        code = EXIT_DERIVATION
    except TracingError as exc:
        summary.update(status="tracing-failure", error=str(exc))
        code = EXIT_TRACING
    _write(out, "summary.json", json.dumps(summary, indent=2, sort_keys=True, default=_jsonable))
    return code


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mobius-gg", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="overrides the command named in the config")
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="worker processes (default $MOBIUS_GG_WORKERS or 1)")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--print-defaults", action="store_true", help="print the default config")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.print_defaults:
        print(dump_config(DEFAULTS))
        print("\n".join(f"# {k}: {v}" for k, v in UNITS.items()))
        return EXIT_OK
    try:
        user = load_config(args.config.read_text()) if args.config else {}
        if args.command:
            user["command"] = args.command
        if args.seed is not None:
            user.setdefault("sampling", {})["seed"] = args.seed
        if args.workers is not None:
            user.setdefault("sampling", {})["workers"] = args.workers
        cfg = resolve_config(user)
    except (ConfigurationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code = run(cfg, args.out)
    log.info("finished %s with exit code %d", cfg["command"], code)
    return code


if __name__ == "__main__":
    sys.exit(main())
