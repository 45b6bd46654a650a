"""Batch front-end.

    gkdvlab --config run.json --out runs/kdv1 [--jobs N] [--quiet]

A run config is JSON with four top-level keys::

    {"command": "ground-state",
     "model": {"family": "mkdv", "k": 1, "auto_gauge_shift": true},
     "grid": {"n": 1024, "L": 80},
     "params": {"charge": 12.0}}

Unknown keys are rejected. Every run writes ``manifest.json`` holding the
fully resolved config (defaults included); it can be fed back to
``--config`` to repeat the run.

Exit codes: 0 success, 2 invalid config, 3 numerical failure (blow-up,
collapse, non-convergence), 4 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BlowUpError, CollapseError, DomainError
from .evolution import evolve, travel_test, unwrap_taus
from .groundstate import MinimizerOptions, minimize_energy_at_charge, nls_ground_state, speed_charge_curve
from .model import check_assumptions, from_config
from .solitons import kdv_profile, mkdv_profile
from .spectral import Grid, read_snapshot, write_field_csv, write_snapshot
from .stability import PerturbationSpec, stability_experiment, subadditivity_check

log = logging.getLogger("gkdvlab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
MANIFEST_VERSION = 1
REQUIRED = object()

_MINIMIZER = {"tol": 1e-10, "max_iter": 100_000, "energy_floor": -1e6}

DEFAULTS = {
    "check-model": {"sample_min": -100.0, "sample_max": 100.0, "samples": 10_000},
    "ground-state": {"charge": REQUIRED, "mode": "gkdv", **_MINIMIZER},
    "evolve": {
        "initial": REQUIRED,
        "dt": 1e-3,
        "t_end": 10.0,
        "sample_stride": 0.1,
        "snapshot_stride": None,
        "dealias": True,
        "track_orbit": False,
        "blowup_threshold": 1e8,
    },
    "travel-test": {
        "charge": REQUIRED, "t_end": 10.0, "dt": 1e-3, "sample_stride": 0.1,
        "frame": "physical", **_MINIMIZER,
    },
    "stability": {
        "charge": REQUIRED, "t_end": 20.0, "dt": 1e-3, "sample_stride": 0.1,
        "ratio": 10.0, "abs_tol": 1e-6, "perturbations": REQUIRED, **_MINIMIZER,
    },
    "speed-curve": {"charges": REQUIRED, **_MINIMIZER},
    "subadditivity": {"c1": REQUIRED, "c2": REQUIRED, "margin": 0.0, **_MINIMIZER},
}

INITIAL_DEFAULTS = {
    "gaussian": {"amplitude": 1.0, "width": 2.0, "center": None},
    "mkdv_soliton": {"speed": 1.0, "center": None},
    "kdv_soliton": {"speed": 1.0, "center": None},
    "snapshot": {"path": REQUIRED},
}

PERTURBATION_DEFAULTS = {"kind": REQUIRED, "epsilon": REQUIRED, "offset": 10.0, "width": 1.0, "seed": 0}
MODEL_DEFAULTS = {"family": REQUIRED, "k": None, "coeffs": None, "auto_gauge_shift": True}
GRID_DEFAULTS = {"n": 1024, "L": 80.0}


class ConfigError(ValueError):
    pass


def _merge(section, given, defaults):
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(f"{section} must be an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {sorted(unknown)}")
    out = {}
    for key, default in defaults.items():
        value = given.get(key, default)
        if value is REQUIRED:
            raise ConfigError(f"{section}.{key} is required")
        out[key] = copy.deepcopy(value)
    return out


def _positive(section, key, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not (value > 0) or not math.isfinite(value):
        raise ConfigError(f"{section}.{key} must be a positive number, got {value!r}")


def resolve_config(raw):
    """Validate a raw config (or an emitted manifest) and inject defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "manifest_version" in raw:
        raw = raw.get("config", {})
    unknown = set(raw) - {"command", "model", "grid", "params"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    command = raw.get("command")
    if command not in DEFAULTS:
        raise ConfigError(f"unknown command {command!r}; expected one of {sorted(DEFAULTS)}")

    model = _merge("model", raw.get("model"), MODEL_DEFAULTS)
    if model["family"] not in ("mkdv", "abs_power", "polynomial"):
        raise ConfigError(f"unknown model family {model['family']!r}")
    if model["family"] == "polynomial":
        if not isinstance(model["coeffs"], list) or not model["coeffs"]:
            raise ConfigError("polynomial model needs a non-empty coeffs list")
    else:
        _positive("model", "k", model["k"])
    grid = _merge("grid", raw.get("grid"), GRID_DEFAULTS)
    params = _merge("params", raw.get("params"), DEFAULTS[command])

    for key in ("charge", "c1", "c2", "dt", "tol"):
        if key in params:
            _positive("params", key, params[key])
    if "t_end" in params and not (isinstance(params["t_end"], (int, float)) and params["t_end"] >= 0):
        raise ConfigError("params.t_end must be non-negative")
    if "charges" in params:
        if not isinstance(params["charges"], list) or not params["charges"]:
            raise ConfigError("params.charges must be a non-empty list")
        for c in params["charges"]:
            _positive("params", "charges", c)
    if command == "ground-state" and params["mode"] not in ("gkdv", "nls"):
        raise ConfigError("params.mode must be 'gkdv' or 'nls'")
    if command == "travel-test" and params["frame"] not in ("physical", "model"):
        raise ConfigError("params.frame must be 'physical' or 'model'")
    if command == "evolve":
        init = params["initial"]
        if not isinstance(init, dict) or init.get("kind") not in INITIAL_DEFAULTS:
            raise ConfigError(f"params.initial.kind must be one of {sorted(INITIAL_DEFAULTS)}")
        kind = init["kind"]
        rest = {k: v for k, v in init.items() if k != "kind"}
        params["initial"] = {"kind": kind, **_merge("params.initial", rest, INITIAL_DEFAULTS[kind])}
    if command == "stability":
        if not isinstance(params["perturbations"], list) or not params["perturbations"]:
            raise ConfigError("params.perturbations must be a non-empty list")
        params["perturbations"] = [
            _merge("params.perturbations[]", p, PERTURBATION_DEFAULTS) for p in params["perturbations"]
        ]
        for p in params["perturbations"]:
            if p["kind"] not in ("scale", "bump", "noise"):
                raise ConfigError(f"unknown perturbation kind {p['kind']!r}")
            if not isinstance(p["epsilon"], (int, float)) or p["epsilon"] < 0:
                raise ConfigError("perturbation epsilon must be non-negative")
    return {"command": command, "model": model, "grid": grid, "params": params}


def _model_cfg(model):
    cfg = {"family": model["family"], "auto_gauge_shift": model["auto_gauge_shift"]}
    if model["family"] == "polynomial":
        cfg["coeffs"] = model["coeffs"]
    else:
        cfg["k"] = model["k"]
    return cfg


def _opts(params):
    return MinimizerOptions(tol=params["tol"], max_iter=int(params["max_iter"]),
                            energy_floor=params["energy_floor"])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


# -- commands -------------------------------------------------------------

def _check_model(model, grid, p, out, jobs):
    rep = check_assumptions(model, (p["sample_min"], p["sample_max"]), int(p["samples"]))
    _write_csv(out / "assumptions.csv", ["name", "passed", "witness"],
               [(n, int(ok), json.dumps(w, sort_keys=True)) for n, ok, w in rep.rows()])
    return EXIT_OK, {"all_passed": rep.all_passed, "well_posed": rep.well_posed,
                     "assumptions": {n: ok for n, ok, _ in rep.rows()}, "warnings": rep.warnings}


def _ground_state(model, grid, p, out, jobs):
    if p["mode"] == "nls":
        gs = nls_ground_state(model, grid, p["charge"], _opts(p))
    else:
        gs = minimize_energy_at_charge(model, grid, p["charge"], _opts(p))
    write_field_csv(out / "profile.csv", gs.profile)
    (out / "snapshots").mkdir(exist_ok=True)
    write_snapshot(out / "snapshots" / "profile.bin", gs.profile, 0.0)
    status = EXIT_OK if gs.converged else EXIT_NUMERICAL
    return status, gs.manifest()


def _initial_field(model, grid, init):
    kind = init["kind"]
    center = init.get("center")
    center = grid.length / 2 if center is None else center
    if kind == "gaussian":
        return grid.field(init["amplitude"] * np.exp(-((grid.x - center) ** 2) / init["width"] ** 2))
    if kind == "mkdv_soliton":
        if model.family.value != "mkdv":
            raise ConfigError("mkdv_soliton initial data needs an mkdv model")
        return grid.field(mkdv_profile(grid.x, model.k, init["speed"], center))
    if kind == "kdv_soliton":
        return grid.field(kdv_profile(grid.x, init["speed"], center))
    field, _ = read_snapshot(init["path"])
    if field.grid != grid:
        raise ConfigError("snapshot grid does not match the configured grid")
    return field


def _evolve(model, grid, p, out, jobs):
    u0 = _initial_field(model, grid, p["initial"])
    results = {}
    try:
        trace = evolve(u0, model, p["dt"], p["t_end"], sample_stride=p["sample_stride"],
                       snapshot_stride=p["snapshot_stride"], reference=u0 if p["track_orbit"] else None,
                       dealias=p["dealias"], blowup_threshold=p["blowup_threshold"])
        status = EXIT_OK
    except BlowUpError as exc:
        trace = exc.trace
        status = EXIT_NUMERICAL
        results["blow_up"] = {"time": exc.time, "message": str(exc)}
        log.error("%s", exc)
    trace.to_csv(out / "trace.csv")
    if trace.snapshots:
        (out / "snapshots").mkdir(exist_ok=True)
        for i, (t, f) in enumerate(trace.snapshots):
            write_snapshot(out / "snapshots" / f"snap_{i:05d}.bin", f, t)
    if trace.final is not None:
        write_field_csv(out / "final.csv", trace.final)
    results.update({
        "energy_drift": trace.energy_drift,
        "charge_drift": trace.charge_drift,
        "drift": trace.drift,
        "well_posedness_guaranteed": trace.well_posed,
        "samples": len(trace.times),
    })
    if not trace.well_posed:
        log.warning("well-posedness not guaranteed for this model (growth condition fails)")
    return status, results


def _travel_test(model, grid, p, out, jobs):
    gs = minimize_energy_at_charge(model, grid, p["charge"], _opts(p))
    if not gs.converged:
        return EXIT_NUMERICAL, {"ground_state": gs.manifest(), "error": "minimizer did not converge"}
    frame = model.unshifted() if p["frame"] == "physical" else model
    rep = travel_test(gs, frame, p["t_end"], dt=p["dt"], sample_stride=p["sample_stride"])
    unwrapped = unwrap_taus(rep.taus, grid.length)
    _write_csv(out / "travel.csv", ["t", "orbital_distance", "best_tau", "best_tau_unwrapped"],
               zip(rep.times, rep.distances, rep.taus, unwrapped))
    write_field_csv(out / "profile.csv", gs.profile)
    return EXIT_OK, {
        "ground_state": gs.manifest(),
        "frame": p["frame"],
        "max_orbital_distance": rep.max_orbital_distance,
        "measured_speed": rep.measured_speed,
        "predicted_speed": rep.predicted_speed,
        "relative_error": rep.relative_error,
    }


def _stability(model, grid, p, out, jobs):
    gs = minimize_energy_at_charge(model, grid, p["charge"], _opts(p))
    if not gs.converged:
        return EXIT_NUMERICAL, {"ground_state": gs.manifest(), "error": "minimizer did not converge"}
    specs = [PerturbationSpec(**q) for q in p["perturbations"]]
    rep = stability_experiment(gs, model, specs, t_end=p["t_end"], dt=p["dt"],
                               sample_stride=p["sample_stride"], ratio=p["ratio"],
                               abs_tol=p["abs_tol"], jobs=jobs)
    rep.to_csv(out / "stability.csv")
    _write_csv(out / "stability_series.csv", ["kind", "epsilon", "t", "orbital_distance"],
               ((r.spec.kind.value, r.spec.epsilon, t, d)
                for r in rep.rows for t, d in zip(r.times, r.distances)))
    summary = rep.summary()
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    status = EXIT_NUMERICAL if any(r.error for r in rep.rows) else EXIT_OK
    return status, {"ground_state": gs.manifest(), **summary}


def _speed_curve(model, grid, p, out, jobs):
    rows = speed_charge_curve(model, grid, p["charges"], _opts(p), jobs=jobs)
    _write_csv(out / "speed_curve.csv",
               ["charge", "speed", "physical_speed", "energy", "residual", "converged", "error"],
               [(r.charge, r.speed, r.physical_speed, r.energy, r.residual, int(r.converged), r.error or "")
                for r in rows])
    failed = [r.charge for r in rows if not r.converged]
    return (EXIT_NUMERICAL if failed else EXIT_OK), {"rows": len(rows), "failed_charges": failed}


def _subadditivity(model, grid, p, out, jobs):
    rep = subadditivity_check(model, grid, p["c1"], p["c2"], _opts(p), p["margin"])
    _write_csv(out / "subadditivity.csv", ["c1", "c2", "e_c1", "e_c2", "e_c1_plus_c2", "gap", "strict"],
               [(rep.c1, rep.c2, rep.e1, rep.e2, rep.e12, rep.gap, int(rep.strict))])
    return EXIT_OK, {"e_c1": rep.e1, "e_c2": rep.e2, "e_c1_plus_c2": rep.e12, "gap": rep.gap,
                     "strict": rep.strict}


COMMANDS = {
    "check-model": _check_model,
    "ground-state": _ground_state,
    "evolve": _evolve,
    "travel-test": _travel_test,
    "stability": _stability,
    "speed-curve": _speed_curve,
    "subadditivity": _subadditivity,
}


def run(config, out_dir, jobs=1):
    """Execute a run config; returns the process exit code."""
    try:
        cfg = resolve_config(config)
        model = from_config(_model_cfg(cfg["model"]))
        grid = Grid(cfg["grid"]["n"], cfg["grid"]["L"])
    except (ConfigError, DomainError, TypeError) as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory: %s", exc)
        return EXIT_IO

    manifest = {"manifest_version": MANIFEST_VERSION, "package_version": __version__,
                "config": cfg, "model": model.describe()}
    try:
        status, results = COMMANDS[cfg["command"]](model, grid, cfg["params"], out, jobs)
    except (ConfigError, DomainError) as exc:
        log.error("invalid input: %s", exc)
        status, results = EXIT_CONFIG, {"error": str(exc)}
    except (CollapseError, BlowUpError) as exc:
        log.error("numerical failure: %s", exc)
        status, results = EXIT_NUMERICAL, {"error": str(exc)}
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    manifest["status"] = status
    manifest["results"] = results
    try:
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default))
    except OSError as exc:
        log.error("cannot write manifest: %s", exc)
        return EXIT_IO
    return status


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not serializable: {type(o)}")


def main(argv=None):
    ap = argparse.ArgumentParser(prog="gkdvlab", description="gKdV hylomorphic soliton laboratory")
    ap.add_argument("--config", required=True, help="run config or emitted manifest (JSON)")
    ap.add_argument("--out", required=True, help="output directory for this run")
    ap.add_argument("--jobs", type=int, default=1, help="concurrent sweep elements")
    ap.add_argument("--quiet", action="store_true", help="only report errors")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        raw = json.loads(Path(args.config).read_text())
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        log.error("config is not valid JSON: %s", exc)
        return EXIT_CONFIG
    code = run(raw, args.out, jobs=max(1, args.jobs))
    if code == EXIT_OK:
        log.info("done: %s", args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
