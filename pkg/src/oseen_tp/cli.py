"""
Command-line front end: ``oseen-tp <command> [--config FILE] [--out DIR]
[--threads N] [--seed S]``.

Commands
    fundsol eval        kernel values at points
    scenario            exact manufactured fields at points and times
    repr check          representation formulas vs the exact scenario fields
    decay fit           log-log exponent fits along rays
    check residual|fft|conv
                        independent oracle checks (exit 1 on failure)
    report              markdown + SVG summary of the CSVs in the output dir

Exit codes: 0 success, 1 tolerance failure, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .core import KernelParams, Ray
from . import asymptotics as asy
from . import fundsol as fs
from . import potentials as pot
from . import scenarios as scn
from . import verify as ver
from ._svg import loglog_svg

# Result rows are tagged with the claim they exercise.
CLAIMS = {
    "kernel.values": "closed-form kernel values",
    "kernel.pde": "kernel pair solves the mode-k Oseen system",
    "kernel.fft": "mode kernel matches the inverse of its Fourier symbol",
    "kernel.decay.periodic": "purely periodic kernel decays like |x|^-3",
    "kernel.decay.steady": "steady kernel decays like [|x|(1+s)]^-1",
    "scenario.values": "manufactured exact solution",
    "repr.velocity": "linear velocity representation formula",
    "repr.pressure": "linear pressure representation formula",
    "decay.flux.timedep.velocity": "time-dependent flux: periodic velocity ~ |x|^-2",
    "decay.flux.timedep.pressure": "time-dependent flux: periodic pressure ~ |x|^-1",
    "decay.flux.const.velocity": "constant flux: periodic velocity ~ |x|^-3",
    "decay.flux.const.pressure": "constant flux: periodic pressure ~ |x|^-2",
    "decay.steady.velocity": "steady velocity ~ [|x|(1+s)]^-1",
    "decay.steady.pressure": "steady pressure ~ |x|^-2",
    "conv.bound": "anisotropic convolution bound",
    "remainder.periodic.velocity": "periodic velocity remainder after the leading term ~ |x|^-4",
    "remainder.periodic.pressure": "periodic pressure remainder after the leading term",
    "remainder.steady.velocity": "steady velocity remainder ~ [|x|(1+s)]^-3/2",
    "remainder.steady.pressure": "steady pressure remainder after the leading term",
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_POS = {"type": "number", "exclusiveMinimum": 0}
_RAY = {
    "type": "object",
    "additionalProperties": False,
    "required": ["direction"],
    "properties": {
        "direction": _VEC3, "label": {"type": "string"},
        "r_min": _POS, "r_max": _POS, "ratio": {"type": "number", "exclusiveMinimum": 1},
        "radii": {"type": "array", "items": _POS, "minItems": 1},
    },
}
_PARAMS = {
    "type": "object",
    "additionalProperties": False,
    "properties": {"zeta": _VEC3, "nu": _POS, "period": _POS, "n_modes": {"type": "integer", "minimum": 1}},
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "label": {"type": "string"},
        "seed": {"type": "integer"},
        "threads": {"type": "integer", "minimum": 1},
        "params": _PARAMS,
        "scenario": {"oneOf": [{"type": "string"}, {"type": "object"}]},
        "flux_pair": {"enum": ["timedep", "const"]},
        "mesh": {
            "type": "object", "additionalProperties": False,
            "properties": {"level": {"type": "integer", "minimum": 0, "maximum": 6},
                           "rule": {"enum": ["centroid", "3point", "6point", "7point"]},
                           "file": {"type": "string"}},
        },
        "points": {"type": "array", "items": _VEC3},
        "rays": {"type": "array", "items": _RAY},
        "times": {"type": "array", "items": {"type": "number"}},
        "tolerances": {
            "type": "object", "additionalProperties": False,
            "properties": {k: _POS for k in ("repr", "residual", "divergence", "fft", "conv_variation")},
        },
        "fundsol": {
            "type": "object", "additionalProperties": False,
            "properties": {"kernel": {"enum": ["E", "P", "stokeslet", "oseen", "mode", "periodic"]},
                           "modes": {"type": "array", "items": {"type": "integer"}}},
        },
        "decay": {
            "type": "object", "additionalProperties": False,
            "properties": {"source": {"enum": ["representation", "analytic"]},
                           "fields": {"type": "array",
                                      "items": {"enum": ["v_perp", "p_perp", "v_steady", "p_steady"]}},
                           "norm": {"enum": ["sup", "l2"]},
                           "drop": {"type": "integer", "minimum": 0},
                           "expansion": {"enum": ["lin", "nonlin"]},
                           "signs": {"enum": list(asy.CONVENTIONS)}},
        },
        "check": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "residual": {"type": "object", "additionalProperties": False,
                             "properties": {"n_points": {"type": "integer", "minimum": 1},
                                            "r_min": _POS, "r_max": _POS,
                                            "modes": {"type": "array", "items": {"type": "integer"}}}},
                "fft": {"type": "object", "additionalProperties": False,
                        "properties": {"half_length": _POS, "n": {"type": "integer", "minimum": 2},
                                       "k": {"type": "integer"}, "r_min": _POS, "r_max": _POS,
                                       "subtract_singular": {"type": "boolean"}}},
                "conv": {"type": "object", "additionalProperties": False,
                         "properties": {"cases": {"type": "array",
                                                  "items": {"enum": sorted(asy.CONV_CASES)}},
                                        "domains": {"type": "array", "items": _POS, "minItems": 2},
                                        "radii": {"type": "array", "items": _POS, "minItems": 1}}},
            },
        },
    },
}

DEFAULT_TOLERANCES = {"repr": 1e-3, "residual": 1e-4, "divergence": 1e-4, "fft": 0.05, "conv_variation": 1.5}


def default_config_text() -> str:
    return resources.files("oseen_tp").joinpath("data/default_config.json").read_text()


def parse_config(text: str, source="<config>") -> dict:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}:{e.colno}: malformed JSON: {e.msg}") from None
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{source}: invalid config at {where}: {e.message}") from None
    return cfg


def load_config(path) -> dict:
    if path is None:
        return parse_config(default_config_text(), "<default config>")
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e.strerror}") from None
    return parse_config(text, str(path))


def _params(cfg) -> KernelParams:
    try:
        return KernelParams.from_dict(cfg.get("params", {}))
    except ValueError as e:
        raise ConfigError(f"invalid params: {e}") from None


def _scenario(cfg, params, override=None):
    spec = override if override is not None else cfg.get("scenario")
    if cfg.get("flux_pair") and spec is None:
        td, cf = scn.make_flux_pair(params)
        return td if cfg["flux_pair"] == "timedep" else cf
    if spec is None:
        return scn.pulsating_source(params)
    try:
        if isinstance(spec, str):
            return scn.load_scenario(spec)
        d = dict(spec)
        d.setdefault("params", params.to_dict())
        return scn.scenario_from_dict(d)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{spec}:{e.lineno}:{e.colno}: malformed JSON: {e.msg}") from None
    except (ValueError, TypeError, OSError) as e:
        raise ConfigError(f"invalid scenario: {e}") from None


def _rays(entries):
    rays = []
    for i, r in enumerate(entries):
        label = r.get("label", f"ray{i}")
        try:
            if "radii" in r:
                rays.append(Ray(tuple(r["direction"]), tuple(r["radii"]), label))
            else:
                rays.append(Ray.geometric(r["direction"], r.get("r_min", 8.0), r.get("r_max", 64.0),
                                          r.get("ratio", math.sqrt(2.0)), label))
        except ValueError as e:
            raise ConfigError(f"invalid ray {label}: {e}") from None
    return rays


def _points_file(path):
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: malformed JSON: {e.msg}") from None
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    if isinstance(d, list):
        d = {"points": d}
    extra = set(d) - {"points", "rays"}
    if extra:
        raise ConfigError(f"{path}: unknown keys {sorted(extra)}")
    pts = [np.asarray(d.get("points", []), float).reshape(-1, 3)]
    pts += [r.points for r in _rays(d.get("rays", []))]
    return np.concatenate(pts)


def _cfg_points(cfg):
    pts = [np.asarray(cfg.get("points", []), float).reshape(-1, 3)]
    pts += [r.points for r in _rays(cfg.get("rays", []))]
    out = np.concatenate(pts)
    if len(out) == 0:
        raise ConfigError("no evaluation points configured")
    return out


def _tol(cfg, key):
    return cfg.get("tolerances", {}).get(key, DEFAULT_TOLERANCES[key])


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(buf.getvalue())


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def _out_path(args, default_name):
    out = Path(args.out)
    if out.suffix.lower() == ".csv":
        return out
    return out / default_name


def _threads(args, cfg):
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("OSEEN_TP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("OSEEN_TP_THREADS must be an integer") from None
    return int(cfg.get("threads", 1))


def _pmap(func, items, threads):
    """Ordered map; per-item results are reduced in input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(func, items))


_BLOCK = 4


def _chunks(x):
    """Fixed-size point blocks: the split, and hence every floating-point
    reduction, is independent of the thread count."""
    return [np.arange(s, min(s + _BLOCK, len(x))) for s in range(0, len(x), _BLOCK)]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_fundsol(args, cfg):
    params = _params(cfg)
    if args.params:
        try:
            params = KernelParams.from_dict(json.loads(Path(args.params).read_text()))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{args.params}:{e.lineno}:{e.colno}: malformed JSON: {e.msg}") from None
        except (OSError, ValueError, TypeError) as e:
            raise ConfigError(f"{args.params}: {e}") from None
    block = cfg.get("fundsol", {})
    kernel = args.kernel or block.get("kernel", "oseen")
    x = _points_file(args.points) if args.points else _cfg_points(cfg)
    names = lambda shape: ["".join(str(i + 1) for i in idx) for idx in np.ndindex(shape)]
    rows, header = [], ["x1", "x2", "x3"]
    try:
        if kernel in ("E", "P", "stokeslet", "oseen"):
            vals = {"E": lambda: fs.laplace_E(x), "P": lambda: fs.pressure_P(x),
                    "stokeslet": lambda: fs.stokeslet(x, params.nu),
                    "oseen": lambda: fs.oseen_steady(x, params)}[kernel]()
            cols = names(vals.shape[1:])
            header += [f"v{c}" for c in cols] if cols != [""] else ["value"]
            for p in range(len(x)):
                rows.append([*x[p], *np.ravel(vals[p]), "kernel.values"])
        elif kernel == "mode":
            modes = block.get("modes", [1])
            header += ["k"] + [f"{part}{c}" for c in names((3, 3)) for part in ("re", "im")]
            for k in modes:
                vals = fs.mode_kernel(x, params, int(k))
                for p in range(len(x)):
                    flat = np.ravel(vals[p])
                    rows.append([*x[p], int(k), *[v for c in flat for v in (c.real, c.imag)], "kernel.values"])
        else:
            times = np.asarray(cfg.get("times", [0.0]), float)
            vals = fs.periodic_velocity_modes(x, params).evaluate(times)
            header += ["t"] + [f"v{c}" for c in names((3, 3))]
            for a, t in enumerate(times):
                for p in range(len(x)):
                    rows.append([*x[p], t, *np.ravel(vals[a, p]), "kernel.values"])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    write_csv(_out_path(args, "fundsol.csv"), header + ["claim"], rows)
    return 0


def cmd_scenario(args, cfg):
    params = _params(cfg)
    sc = _scenario(cfg, params)
    x = _cfg_points(cfg)
    times = np.asarray(cfg.get("times", [0.0]), float)
    v = scn.velocity_modes(sc, x).evaluate(times)
    p = scn.pressure_modes(sc, x).evaluate(times)
    rows = []
    for a, t in enumerate(times):
        for i, xp in enumerate(x):
            for j in range(3):
                rows.append([*xp, t, f"v{j + 1}", v[a, i, j], "scenario.values"])
            rows.append([*xp, t, "p", p[a, i], "scenario.values"])
    write_csv(_out_path(args, "scenario.csv"), ["x", "y", "z", "t", "field", "value", "claim"], rows)
    return 0


def _mesh(cfg, sc, args=None):
    m = cfg.get("mesh", {})
    level = args.mesh_level if args is not None and getattr(args, "mesh_level", None) is not None \
        else m.get("level", 3)
    rule = m.get("rule", "7point")
    if "file" in m:
        from .core import load_mesh
        try:
            return load_mesh(m["file"], rule)
        except (ValueError, OSError) as e:
            raise ConfigError(f"invalid mesh: {e}") from None
    return sc.mesh(level, rule)


def cmd_repr(args, cfg):
    params = _params(cfg)
    sc = _scenario(cfg, params, args.scenario)
    params = sc.params
    mesh = _mesh(cfg, sc, args)
    x = _points_file(args.points) if args.points else _cfg_points(cfg)
    bd = scn.boundary_data(sc, mesh)
    threads = _threads(args, cfg)

    def run(idx):
        xs = x[idx]
        return (pot.represent_velocity_linear(mesh, bd, None, xs, params).coeffs,
                pot.represent_pressure_linear(mesh, bd, None, xs, params).coeffs)
    try:
        parts = _pmap(run, _chunks(x), threads)
    except pot.ProximityError as e:
        raise ConfigError(str(e)) from None
    v_rep = np.concatenate([a for a, _ in parts], axis=1)
    p_rep = np.concatenate([b for _, b in parts], axis=1)
    v_ex = scn.velocity_modes(sc, x).coeffs
    p_ex = scn.pressure_modes(sc, x).coeffs
    n = params.n_modes
    tol = _tol(cfg, "repr")
    rows, worst = [], 0.0
    for field, rep, ex, claim in (("v", v_rep, v_ex, "repr.velocity"), ("p", p_rep, p_ex, "repr.pressure")):
        ax = tuple(range(2, ex.ndim))
        mag_ex = np.sqrt((np.abs(ex) ** 2).sum(axis=ax)) if ax else np.abs(ex)
        mag_rep = np.sqrt((np.abs(rep) ** 2).sum(axis=ax)) if ax else np.abs(rep)
        err = np.sqrt((np.abs(rep - ex) ** 2).sum(axis=ax)) if ax else np.abs(rep - ex)
        scale = mag_ex.max(axis=0)
        for i in range(len(x)):
            for k in range(-n, n + 1):
                if mag_ex[k + n, i] == 0 and mag_rep[k + n, i] < 1e-14 * max(scale[i], 1e-300):
                    continue
                rel = err[k + n, i] / scale[i]
                worst = max(worst, rel)
                rows.append([*x[i], field, k, mag_ex[k + n, i], mag_rep[k + n, i], rel, claim])
    write_csv(_out_path(args, "repr.csv"),
              ["x", "y", "z", "field", "mode", "abs_analytic", "abs_represented", "rel_err", "claim"], rows)
    print(f"repr check: max rel_err {worst:.3e} (tol {tol:g}) -> {'PASS' if worst <= tol else 'FAIL'}")
    return 0 if worst <= tol else 1


def _decay_claim(field, timedep, remainder=False):
    if remainder:
        part = "steady" if field.endswith("steady") else "periodic"
        return f"remainder.{part}.{'velocity' if field.startswith('v') else 'pressure'}"
    if field.endswith("steady"):
        return "decay.steady.velocity" if field.startswith("v") else "decay.steady.pressure"
    flux = "timedep" if timedep else "const"
    return f"decay.flux.{flux}.{'velocity' if field.startswith('v') else 'pressure'}"


def _rays_file(path):
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: malformed JSON: {e.msg}") from None
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    entries = d.get("rays") if isinstance(d, dict) else d
    if not isinstance(entries, list):
        raise ConfigError(f"{path}: expected a list of rays or {{\"rays\": [...]}}")
    try:
        jsonschema.validate(entries, {"type": "array", "items": _RAY})
    except jsonschema.ValidationError as e:
        raise ConfigError(f"{path}: invalid rays: {e.message}") from None
    return entries


def cmd_decay(args, cfg):
    params = _params(cfg)
    sc = _scenario(cfg, params, args.scenario)
    params = sc.params
    block = cfg.get("decay", {})
    source = block.get("source", "representation")
    fields = block.get("fields", ["v_perp", "p_perp"])
    norm = block.get("norm", "sup")
    drop = block.get("drop", 2)
    expansion = args.expansion or block.get("expansion")
    signs = args.signs or block.get("signs", "thm_lin")
    entries = _rays_file(args.rays) if args.rays else cfg.get("rays", [{"direction": [0, 1, 0], "label": "e2"}])
    rays = _rays(entries)
    mesh = _mesh(cfg, sc)
    bd = scn.boundary_data(sc, mesh)
    phi = asy.flux_Phi(mesh, bd.v_b)
    timedep = bool(np.abs(phi.purely_periodic().coeffs).max() > 1e-8 * max(np.abs(phi.coeffs).max(), 1.0))
    threads = _threads(args, cfg)
    if source == "representation":
        vfun = lambda pts: pot.represent_velocity_linear(mesh, bd, None, pts, params)
        pfun = lambda pts: pot.represent_pressure_linear(mesh, bd, None, pts, params)
    else:
        vfun = lambda pts: scn.velocity_modes(sc, pts)
        pfun = lambda pts: scn.pressure_modes(sc, pts)
    vlead = plead = None
    if expansion is not None:
        # remainder after the leading term built from the boundary data alone
        co = asy.expansion_coefficients(mesh, bd, None, params)
        vlead = lambda pts: asy.leading_velocity_modes(co, pts, params, signs, expansion)
        plead = lambda pts: asy.leading_pressure_modes(co, pts, params, signs, expansion)

    def run(ray):
        ray.check_outside(mesh)
        out = {}
        if any(f.startswith("v") for f in fields):
            out["v"] = asy.remainder_samples(vfun, vlead, ray, norm)
        if any(f.startswith("p") for f in fields):
            out["p"] = asy.remainder_samples(pfun, plead, ray, norm)
        return out
    try:
        tables = _pmap(run, rays, threads)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    fit_rows, sample_rows = [], []
    for ray, tab in zip(rays, tables):
        for f in fields:
            t = tab[f[0]]
            part = "steady" if f.endswith("steady") else "periodic"
            vals = t.steady if part == "steady" else t.periodic
            try:
                fit = asy.fit_decay(t.radii, vals, drop=drop, label=f, ray=ray.label)
            except asy.FitError as e:
                raise ConfigError(f"fit {f} on {ray.label}: {e}") from None
            fit_rows.append([f, ray.label, fit.exponent, fit.stderr, fit.residual, fit.intercept, fit.n_samples,
                             _decay_claim(f, timedep, expansion is not None)])
            for r, v in zip(t.radii, vals):
                sample_rows.append([f, ray.label, r, v])
    out = _out_path(args, "fits.csv")
    write_csv(out, ["field", "ray", "exponent", "stderr", "residual", "intercept", "n_samples", "claim"], fit_rows)
    write_csv(out.with_name(out.stem + "_samples.csv"), ["field", "ray", "radius", "value"], sample_rows)
    for row in fit_rows:
        print(f"{row[0]:>9s} {row[1]:>12s} exponent {row[2]: .3f} +- {row[3]:.3f}")
    return 0


def _check_residual(cfg, seed):
    params = _params(cfg)
    b = cfg.get("check", {}).get("residual", {})
    pts = ver.random_points(b.get("n_points", 20), b.get("r_min", 1.0), b.get("r_max", 8.0), seed)
    tol, dtol = _tol(cfg, "residual"), _tol(cfg, "divergence")
    rows, ok = [], True
    for k in b.get("modes", [0, 1, -1, 2, -2]):
        sampler = ver.kernel_pair(params, int(k))
        for x in pts:
            res, div = ver.pde_residual(sampler, int(k), x, params)
            good = res < tol and div < dtol
            ok &= good
            rows.append([*x, int(k), res, div, "pass" if good else "fail", "kernel.pde"])
    return ["x", "y", "z", "mode", "residual", "divergence", "status", "claim"], rows, ok


def _check_fft(cfg, seed):
    params = _params(cfg)
    b = cfg.get("check", {}).get("fft", {})
    try:
        spec = ver.FFTGridSpec(b.get("half_length", 16.0), b.get("n", 64), b.get("k", 1), params)
    except ver.OracleError as e:
        raise ConfigError(str(e)) from None
    tol = _tol(cfg, "fft")
    dis = ver.fft_disagreement(spec, b.get("r_min", 1.0), b.get("r_max", spec.guard_radius),
                               subtract_singular=b.get("subtract_singular", True))
    ok = dis < tol
    return (["half_length", "n", "k", "disagreement", "tolerance", "status", "claim"],
            [[spec.half_length, spec.n, spec.k, dis, tol, "pass" if ok else "fail", "kernel.fft"]], ok)


def _check_conv(cfg, seed):
    params = _params(cfg)
    b = cfg.get("check", {}).get("conv", {})
    tol = _tol(cfg, "conv_variation")
    rows, ok = [], True
    for case in b.get("cases", sorted(asy.CONV_CASES)):
        kw = {}
        if "radii" in b:
            kw["radii"] = tuple(b["radii"])
        rep = asy.verify_conv_bounds(case, params, domains=tuple(b.get("domains", (64.0, 128.0))), **kw)
        good = rep.variation < tol
        ok &= good
        rows.append([case, rep.A, rep.B, ";".join(_fmt(s) for s in rep.sup_ratios), rep.variation,
                     "pass" if good else "fail", "conv.bound"])
    return ["case", "A", "B", "sup_ratio_by_domain", "variation", "status", "claim"], rows, ok


def cmd_check(args, cfg):
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    fn = {"residual": _check_residual, "fft": _check_fft, "conv": _check_conv}[args.kind]
    header, rows, ok = fn(cfg, seed)
    write_csv(_out_path(args, f"check_{args.kind}.csv"), header, rows)
    n_fail = sum(1 for r in rows if "fail" in r)
    print(f"check {args.kind}: {len(rows) - n_fail}/{len(rows)} passed -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_report(args, cfg):
    out = Path(args.out)
    if not out.is_dir():
        raise ConfigError(f"{out}: not a directory")
    csvs = sorted(p for p in out.glob("*.csv") if not p.name.endswith("_samples.csv"))
    lines = ["# oseen-tp report", ""]
    for path in csvs:
        rows = read_csv(path)
        if not rows or "claim" not in rows[0]:
            continue
        lines += [f"## {path.name}", ""]
        header = list(rows[0].keys())
        lines.append("| " + " | ".join(header) + " | claim description |")
        lines.append("|" + "---|" * (len(header) + 1))
        for r in rows[:200]:
            lines.append("| " + " | ".join(r[h] for h in header) + f" | {CLAIMS.get(r['claim'], '?')} |")
        if len(rows) > 200:
            lines.append(f"\n({len(rows) - 200} further rows omitted)")
        lines.append("")
        samples = path.with_name(path.stem + "_samples.csv")
        if samples.exists():
            srows = read_csv(samples)
            fits = {(r["field"], r["ray"]): r for r in rows}
            for field in sorted({r["field"] for r in srows}):
                series = []
                for ray in sorted({r["ray"] for r in srows if r["field"] == field}):
                    pts = [(float(r["radius"]), float(r["value"])) for r in srows
                           if r["field"] == field and r["ray"] == ray]
                    fit = fits.get((field, ray))
                    series.append(dict(label=ray, x=[p[0] for p in pts], y=[p[1] for p in pts],
                                       slope=float(fit["exponent"]) if fit else None,
                                       intercept=float(fit["intercept"]) if fit else None))
                svg = out / f"{path.stem}_{field}.svg"
                svg.write_text(loglog_svg(series, title=f"{field} ({path.stem})", ylabel=field))
                lines += [f"![{field}]({svg.name})", ""]
    (out / "report.md").write_text("\n".join(lines) + "\n")
    print(f"report: {out / 'report.md'}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (default: shipped config)")
    common.add_argument("--out", default=".", help="output directory (or .csv file)")
    common.add_argument("--threads", type=int, help="worker threads (fallback: OSEEN_TP_THREADS)")
    common.add_argument("--seed", type=int, help="seed for sampled test points")
    ap = argparse.ArgumentParser(prog="oseen-tp", description="Time-periodic Oseen kernels and far-field checks")
    sub = ap.add_subparsers(dest="command", required=True)
    f = sub.add_parser("fundsol", parents=[common], help="kernel values")
    f.add_argument("action", choices=["eval"])
    f.add_argument("--kernel", choices=["E", "P", "stokeslet", "oseen", "mode", "periodic"])
    f.add_argument("--points", help="JSON file with points and/or rays")
    f.add_argument("--params", help="JSON file with kernel parameters")
    sub.add_parser("scenario", parents=[common], help="exact manufactured fields")
    r = sub.add_parser("repr", parents=[common], help="representation formula check")
    r.add_argument("action", choices=["check"])
    r.add_argument("--scenario", help="scenario JSON file")
    r.add_argument("--mesh-level", type=int, dest="mesh_level")
    r.add_argument("--points", help="JSON file with points and/or rays")
    d = sub.add_parser("decay", parents=[common], help="decay exponent fits")
    d.add_argument("action", choices=["fit"])
    d.add_argument("--scenario", help="scenario JSON file")
    d.add_argument("--rays", help="JSON file with a list of rays")
    d.add_argument("--expansion", choices=["lin", "nonlin"],
                   help="fit the remainder after this leading-term expansion")
    d.add_argument("--signs", choices=list(asy.CONVENTIONS), help="sign convention of the leading term")
    c = sub.add_parser("check", parents=[common], help="oracle checks")
    c.add_argument("kind", choices=["residual", "fft", "conv"])
    sub.add_parser("report", parents=[common], help="summarize CSVs in --out")
    return ap


_COMMANDS = {"fundsol": cmd_fundsol, "scenario": cmd_scenario, "repr": cmd_repr, "decay": cmd_decay,
             "check": cmd_check, "report": cmd_report}


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as e:
        print(f"oseen-tp: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
