"""Batch experiment runner.

Usage::

    lilfields <experiment> --config run.json [--seed N] [--out PATH]
                           [--strict-serial] [--threads N]

The config is one JSON document::

    {"schema": 1, "experiment": "compare", "seed": 7, "format": "csv",
     "model": {...}, "mc": {"reps": 200, "p": 1.5}, "params": {...}}

Exit codes: 0 success, 2 invalid config, 3 numeric failure (including a
failed verification verdict), 64 unknown experiment.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import default_kind, model_bound
from .chaos import hermite_coeffs, hermite_eval, series_constant
from .devcheck import check_bercu_touati, check_freedman, check_maximal_ergodic
from .fields import GSpec, model_from_dict, model_to_dict
from .innovations import InnovationSpec
from .maxfun import saturation_curve
from .parallel import resolve_threads
from .projections import DependenceProfile
from .scalars import (NumericError, OrliczParams, lp_norm_samples, orlicz_norm_samples,
                      orlicz_norm_with_se, weak_lp_norm_samples)
from .sets import GrowthError, RectUnion, check_partition_bounds, geometric_union_sequence, validate_growth

SCHEMA = 1
EXPERIMENTS = ("maxnorm", "bound", "compare", "verify", "orlicz", "hermite", "sets")
DEFAULT_FORMAT = {"maxnorm": "csv", "compare": "csv", "orlicz": "csv", "bound": "json",
                  "verify": "json", "hermite": "json", "sets": "json"}

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3, 64


class ConfigError(ValueError):
    """The experiment config is malformed or references missing files."""


# -- config handling ------------------------------------------------------------


def _resolve_path(base: Path, value) -> str:
    path = Path(value)
    if not path.is_absolute():
        path = base / path
    if not path.is_file():
        raise ConfigError(f"referenced file not found: {value}")
    return str(path)


def _mc_defaults(mc: dict, reps: int) -> dict:
    out = {"reps": reps, "p": 1.5}
    out.update(mc or {})
    if not 1.0 < float(out["p"]) < 2.0:
        raise ConfigError("mc.p must lie in (1, 2)")
    if int(out["reps"]) < 1:
        raise ConfigError("mc.reps must be >= 1")
    return out


def load_config(path, experiment: str, seed_override=None) -> dict:
    """Read, validate and fill defaults; file references are checked here."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if cfg.get("schema") != SCHEMA:
        raise ConfigError(f"unsupported schema {cfg.get('schema')!r}; expected {SCHEMA}")
    tag = cfg.setdefault("experiment", experiment)
    if tag != experiment:
        raise ConfigError(f"config is for experiment {tag!r}, invoked as {experiment!r}")
    if seed_override is not None:
        cfg["seed"] = int(seed_override)
    if not isinstance(cfg.get("seed"), int):
        raise ConfigError("an integer seed is mandatory (config 'seed' or --seed)")
    cfg.setdefault("format", DEFAULT_FORMAT[experiment])
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be 'csv' or 'json'")
    params = cfg.setdefault("params", {})
    base = path.parent
    for key in ("samples_file", "union_file", "dependence_file"):
        if key in params:
            params[key] = _resolve_path(base, params[key])
    if experiment in ("maxnorm", "compare", "bound") and "model" not in cfg:
        raise ConfigError(f"experiment {experiment!r} needs a model")
    return cfg


# -- experiments ----------------------------------------------------------------
# Each runner returns (columns, rows, summary, ok).


def _model(cfg):
    model = model_from_dict(cfg["model"])
    cfg["model"] = model_to_dict(model)
    return model


def run_maxnorm(cfg, threads):
    model = _model(cfg)
    mc = cfg["mc"] = _mc_defaults(cfg.get("mc"), 200)
    prm = cfg["params"]
    prm.setdefault("exponents", [4, 5, 6])
    prm.setdefault("mode", "full")
    curve = saturation_curve(model, float(mc["p"]), prm["exponents"], int(mc["reps"]), cfg["seed"],
                             prm["mode"], threads)
    cols = ["k", "n", "mode", "p", "reps", "lp_estimate", "se"]
    rows = [[k, e.truncation, prm["mode"], e.p, e.reps, e.lp_estimate, e.se] for k, e in zip(prm["exponents"], curve)]
    return cols, rows, {}, True


def _load_dependence(prm, r):
    if "dependence_file" not in prm:
        return None
    return DependenceProfile.from_csv(prm["dependence_file"], r)


def run_bound(cfg, threads):
    model = _model(cfg)
    prm = cfg["params"]
    prm.setdefault("profile", "rect_d_half")
    prm.setdefault("p", 1.5)
    prm.setdefault("kind", default_kind(model))
    r = model.d - 1.0 if prm["profile"] == "rect_d_half" else 0.0
    rep = model_bound(model, prm["profile"], float(prm["p"]), prm["kind"], _load_dependence(prm, r))
    cols = ["j", "weight", "shell_norm", "term", "partial_sum"]
    rows = [[j, w, s, t, ps] for j, (w, s, t, ps) in
            enumerate(zip(rep.weights, rep.shell_norms, rep.terms, rep.partial_sums))]
    summary = {"total": rep.total, "tail_flag": rep.tail_flag, "constant_free": rep.constant_free,
               "inputs": rep.inputs}
    return cols, rows, summary, True


def run_compare(cfg, threads):
    model = _model(cfg)
    mc = cfg["mc"] = _mc_defaults(cfg.get("mc"), 200)
    prm = cfg["params"]
    prm.setdefault("exponents", [4, 5, 6])
    prm.setdefault("mode", "full")
    prm.setdefault("profile", "rect_d_half")
    prm.setdefault("kind", default_kind(model))
    p = float(mc["p"])
    r = model.d - 1.0 if prm["profile"] == "rect_d_half" else 0.0
    rep = model_bound(model, prm["profile"], p, prm["kind"], _load_dependence(prm, r))
    curve = saturation_curve(model, p, prm["exponents"], int(mc["reps"]), cfg["seed"], prm["mode"], threads)
    cols = ["k", "n", "reps", "empirical_lp", "se", "bound_series", "ratio_unitless"]
    rows = []
    for k, e in zip(prm["exponents"], curve):
        ratio = e.lp_estimate / rep.total if rep.total > 0 else math.inf
        rows.append([k, e.truncation, e.reps, e.lp_estimate, e.se, rep.total, ratio])
    return cols, rows, {"bound_tail_flag": rep.tail_flag, "constant_free": True}, True


VERIFY_DEFAULTS = {
    "bercu_touati": {"innovation": {"tag": "standard_normal"}, "n": 100, "y": 100.0,
                     "x_grid": [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0, 50.0], "reps": 100_000},
    "freedman": {"innovation": {"tag": "rademacher"}, "n": 64, "y": 64.0,
                 "x_grid": [4.0, 8.0, 12.0, 16.0, 20.0, 24.0, 32.0], "reps": 100_000},
    "maximal_ergodic": {"model": {"family": "iid", "d": 2, "innovation": {"tag": "standard_normal"}},
                        "n_max": 64, "y_grid": [1.0, 1.5, 2.0, 3.0, 4.0], "reps": 10_000, "transform": "abs"},
}


def run_verify(cfg, threads):
    prm = cfg["params"]
    suites = prm.setdefault("suites", list(VERIFY_DEFAULTS))
    reports = []
    for idx, name in enumerate(suites):
        if name not in VERIFY_DEFAULTS:
            raise ConfigError(f"unknown verification suite {name!r}")
        opts = dict(VERIFY_DEFAULTS[name])
        opts.update(prm.get(name, {}))
        prm[name] = opts
        seed = cfg["seed"] + idx
        if name == "maximal_ergodic":
            model = model_from_dict(opts["model"])
            reports.append(check_maximal_ergodic(model, model.d, int(opts["n_max"]), opts["y_grid"],
                                                 int(opts["reps"]), seed, opts["transform"], threads=threads))
            continue
        innov = InnovationSpec(**opts["innovation"])
        check = check_bercu_touati if name == "bercu_touati" else check_freedman
        reports.append(check(innov, int(opts["n"]), opts["x_grid"], float(opts["y"]), int(opts["reps"]), seed))
    cols = ["check", "point", "empirical", "se", "bound", "pass"]
    rows = [[r.name, *row] for r in reports for row in zip(r.points, r.empirical, r.se, r.bound, r.passed)]
    verdict = all(r.verdict for r in reports)
    summary = {"verdict": verdict, "reports": [r.to_dict() for r in reports]}
    return cols, rows, summary, verdict


def _read_samples(path) -> np.ndarray:
    vals = np.loadtxt(path, comments="#", delimiter=",", ndmin=2)
    return vals[:, -1]


def run_orlicz(cfg, threads):
    prm = cfg["params"]
    if "samples_file" not in prm:
        raise ConfigError("orlicz needs params.samples_file")
    prm.setdefault("p", 2.0)
    prm.setdefault("r", 0.0)
    prm.setdefault("tol", 1e-10)
    x = _read_samples(prm["samples_file"])
    params = OrliczParams(float(prm["p"]), float(prm["r"]))
    norm = orlicz_norm_samples(x, params, float(prm["tol"]))
    se = orlicz_norm_with_se(x, params)[1] if x.size >= 40 else math.nan
    cols = ["n", "p", "r", "orlicz_norm", "se", "lp_norm", "weak_lp_norm"]
    weak = weak_lp_norm_samples(x, params.p) if 1 < params.p < 2 else math.nan
    rows = [[int(x.size), params.p, params.r, norm, se, lp_norm_samples(x, params.p), weak]]
    return cols, rows, {}, True


def _target_function(spec: dict):
    tag = spec.get("tag")
    if tag == "hermite":
        q = int(spec["q"])
        return lambda x: hermite_eval(q, x)
    if tag == "polynomial":
        coeffs = [float(c) for c in spec["coefficients"]]
        return lambda x: np.polynomial.polynomial.polyval(x, coeffs)
    g = GSpec(**spec)
    return g


def run_hermite(cfg, threads):
    prm = cfg["params"]
    if "f" not in prm:
        raise ConfigError("hermite needs params.f")
    prm.setdefault("Q", 20)
    prm.setdefault("nodes", 128)
    prm.setdefault("d", 2)
    prm.setdefault("profile", "rectangles")
    hc = hermite_coeffs(_target_function(prm["f"]), int(prm["Q"]), int(prm["nodes"]))
    value, tail = series_constant(hc.c, int(prm["d"]), prm["profile"])
    cols = ["q", "c_q"]
    rows = [[0, hc.c0]] + [[q, hc.coefficient(q)] for q in range(1, hc.Q + 1)]
    summary = {"series_constant": value, "tail_flag": tail, "warnings": list(hc.warnings)}
    return cols, rows, summary, True


def run_sets(cfg, threads):
    prm = cfg["params"]
    summary, rows = {}, []
    cards = prm.get("cardinalities")
    if "geometric" in prm:
        g = prm["geometric"]
        seq = geometric_union_sequence(int(g["d"]), float(g["a"]), int(g["count"]), bool(g.get("allow_reindex", False)))
        cards = seq.cardinalities
    if cards is not None:
        try:
            cert = validate_growth(cards, prm.get("horizon"), bool(prm.get("allow_reindex", False)))
            summary["growth"] = {"ok": True, "cardinalities": list(cards), "delta": cert.delta,
                                 "C_sqrt": cert.C_sqrt, "C_linear": cert.C_linear, "horizon": cert.horizon,
                                 "delta_grid": cert.delta_grid}
        except GrowthError as exc:
            summary["growth"] = {"ok": False, "cardinalities": list(cards), "error": str(exc)}
    union = None
    if "union_file" in prm:
        union = RectUnion.from_json(Path(prm["union_file"]).read_text(encoding="utf-8"))
    elif "union" in prm:
        union = RectUnion.from_json(json.dumps(prm["union"]))
    if union is not None:
        j = int(prm.setdefault("j", 1))
        rep = check_partition_bounds(union, j)
        summary["partition"] = {"j": j, "modulus": rep.modulus, "ell": rep.ell,
                                "lower_bound": rep.lower_bound, "upper_bound": rep.upper_bound,
                                "sum_of_classes": int(sum(rep.cards.values())),
                                "violations": [list(a) for a in rep.violations],
                                "sides_ge_modulus": rep.sides_ge_modulus,
                                "upper_bound_guaranteed": rep.upper_bound_guaranteed}
        rows = [["-".join(map(str, a)), c, rep.lower_ok[a], rep.upper_ok[a]] for a, c in sorted(rep.cards.items())]
    if not summary:
        raise ConfigError("sets needs params.cardinalities, params.geometric, params.union or params.union_file")
    return ["residue", "cardinality", "lower_ok", "upper_ok"], rows, summary, True


RUNNERS = {"maxnorm": run_maxnorm, "bound": run_bound, "compare": run_compare, "verify": run_verify,
           "orlicz": run_orlicz, "hermite": run_hermite, "sets": run_sets}


# -- output ---------------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else "-".join(map(str, k)): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def render(cfg: dict, cols, rows, summary) -> str:
    header = {"lilfields_version": __version__, "config": cfg}
    if cfg["format"] == "json":
        doc = dict(header, columns=cols, rows=rows, summary=summary)
        return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# lilfields {__version__}\n")
    buf.write("# config: " + json.dumps(_jsonable(cfg), sort_keys=True) + "\n")
    if summary:
        buf.write("# summary: " + json.dumps(_jsonable(summary), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def run(experiment: str, config_path, seed=None, out=None, threads=None, strict_serial=False) -> int:
    """Run one experiment and write its report; returns the exit status."""
    if experiment not in RUNNERS:
        print(f"unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENTS)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(config_path, experiment, seed)
        n_threads = 1 if strict_serial else resolve_threads(threads)
        cols, rows, summary, ok = RUNNERS[experiment](cfg, n_threads)
    except (NumericError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = render(cfg, cols, rows, summary)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print("verification verdict: FAIL", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lilfields", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"lilfields {__version__}")
    parser.add_argument("experiment", help=" | ".join(EXPERIMENTS))
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="output file (default: stdout)")
    parser.add_argument("--strict-serial", action="store_true", help="force one thread")
    parser.add_argument("--threads", type=int, help="worker threads (fallback: $LILFIELDS_THREADS)")
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv and not argv[0].startswith("-") and argv[0] not in EXPERIMENTS:
        print(f"unknown experiment {argv[0]!r}; expected one of {', '.join(EXPERIMENTS)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    return run(args.experiment, args.config, args.seed, args.out, args.threads, args.strict_serial)


if __name__ == "__main__":
    sys.exit(main())
