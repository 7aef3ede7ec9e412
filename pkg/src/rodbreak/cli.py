"""Command line front end: ``rodbreak analyze|simulate|sweep``.

Configs are JSON documents validated against ``CONFIG_SCHEMA`` (unknown keys
are rejected).  Exit codes: 0 ok, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import criteria
from .characteristics import (SparseFramesError, flow_identity_residual, integrate_flows,
                              lyapunov_AB, monotonicity_violation, write_trace_csv)
from .field import Grid, NonSmoothDataError, potential, sample_at
from .params import DomainError, beta_of
from .profiles import KINDS, ProfileSpec, ResolutionError, build_profile
from .solver import FAILURE, NumericalFailure, SimulationConfig, run, write_outputs

log = logging.getLogger("rodbreak")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

_num = {"type": "number"}
_profile = {
    "type": "object",
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "kind": {"enum": list(KINDS)},
        "params": {"type": "object"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}
CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "gamma": _num,
        "grid": {
            "type": "object",
            "properties": {"L": {"type": "number", "exclusiveMinimum": 0},
                           "N": {"type": "integer", "minimum": 16}},
            "required": ["L", "N"],
            "additionalProperties": False,
        },
        "profile": _profile,
        "solver": {
            "type": "object",
            "properties": {
                "dt_initial": {"type": "number", "exclusiveMinimum": 0},
                "cfl_factor": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "frame_stride": {"type": "integer", "minimum": 1},
                "blowup_slope_threshold": {"type": "number", "exclusiveMinimum": 0},
                "dealias": {"type": "boolean"},
            },
            "required": ["dt_initial", "t_end"],
            "additionalProperties": False,
        },
        "characteristics": {
            "type": "object",
            "properties": {
                "seeds": {"type": "array", "items": _num},
                # traces and their diagnostics stop before min u_x drops below this
                "slope_floor": {"type": "number", "exclusiveMaximum": 0},
            },
            "additionalProperties": False,
        },
        "output_dir": {"type": "string"},
        "flavor": {"enum": ["criteria", "beta-table"]},
        "gamma_list": {"type": "array", "items": _num, "minItems": 1},
        "profile_list": {"type": "array", "items": _profile, "minItems": 1},
    },
    "additionalProperties": False,
}


class ConfigError(ValueError):
    pass


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from exc
    return cfg


def _require(cfg: dict, *keys: str, command: str) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"{command} needs config keys: {', '.join(missing)}")


def _grid(cfg) -> Grid:
    try:
        return Grid(float(cfg["grid"]["L"]), int(cfg["grid"]["N"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _profile_of(entry: dict, grid: Grid):
    try:
        return build_profile(ProfileSpec(entry["kind"], entry.get("params", {})), grid)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad parameters for profile {entry['kind']!r}: {exc}") from exc
    except (DomainError, ResolutionError, ValueError, SyntaxError) as exc:
        raise ConfigError(f"profile {entry['kind']!r}: {exc}") from exc


def _sim_config(cfg: dict, gamma: float, grid: Grid) -> SimulationConfig:
    try:
        return SimulationConfig(gamma=gamma, grid=grid, **cfg["solver"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _bound_if_triggered(u0, gamma, verdicts):
    for v in verdicts:
        if v.name == "brandolese" and v.triggered:
            return criteria.blowup_bound(u0, gamma, v.witness)
    return None


# Commands ------------------------------------------------------------------

def analyze(cfg: dict, out: Path) -> int:
    _require(cfg, "gamma", "grid", "profile", command="analyze")
    grid = _grid(cfg)
    gamma = float(cfg["gamma"])
    u0 = _profile_of(cfg["profile"], grid)
    verdicts = [v for v in criteria.run_battery(u0, gamma) if v.applicable]
    bound = _bound_if_triggered(u0, gamma, verdicts)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json({
        "gamma": gamma,
        "verdicts": [v.to_dict() for v in verdicts],
        "blowup_bound": bound.to_dict() if bound is not None else None,
    }, out / "criteria.json")
    return EXIT_OK


def _seed_list(cfg: dict, grid: Grid, seed_grid: int | None) -> list[float]:
    seeds = list(cfg.get("characteristics", {}).get("seeds", []))
    if seed_grid:
        seeds += list(-0.5 * grid.L + grid.L * (np.arange(seed_grid) + 0.5) / seed_grid)
    lo, hi = -0.5 * grid.L, 0.5 * grid.L
    bad = [s for s in seeds if not lo <= s <= hi]
    if bad:
        raise ConfigError(f"characteristic seeds outside [-L/2, L/2]: {bad}")
    return seeds


def simulate(cfg: dict, out: Path, seed_grid: int | None = None) -> int:
    _require(cfg, "gamma", "grid", "profile", "solver", command="simulate")
    grid = _grid(cfg)
    gamma = float(cfg["gamma"])
    u0 = _profile_of(cfg["profile"], grid)
    if not u0.smooth:
        raise ConfigError("simulate needs a smooth profile; kinked data cannot be time stepped")
    sim_cfg = _sim_config(cfg, gamma, grid)
    seeds = _seed_list(cfg, grid, seed_grid)
    slope_floor = cfg.get("characteristics", {}).get("slope_floor", -20.0)

    result = run(sim_cfg, u0)
    log.info("solver: %s at t=%.6g after %d frames", result.status, result.times[-1], len(result.frames))
    out.mkdir(parents=True, exist_ok=True)
    write_outputs(result, out)

    verdicts = [v for v in criteria.run_battery(u0, gamma) if v.applicable]
    bound = _bound_if_triggered(u0, gamma, verdicts)
    summary = {
        "status": result.status,
        "estimated_T_star": result.estimated_T_star,
        "T_upper": bound.T_upper if bound is not None else None,
        "monotonicity_ok": None,
        "identity_residual_max": None,
    }
    code = EXIT_NUMERICAL if result.status == FAILURE else EXIT_OK
    if seeds and len(result.frames) >= 2:
        try:
            traces = integrate_flows(result, gamma, seeds, slope_floor=slope_floor)
        except SparseFramesError as exc:
            log.error("characteristics: %s", exc)
            traces = []
            code = EXIT_NUMERICAL
        except ValueError as exc:
            log.warning("characteristics skipped: %s", exc)
            traces = []
        if traces:
            y0 = potential(u0)
            scale = float(np.max(np.abs(y0.values))) or 1.0
            y_seeds = np.atleast_1d(sample_at(y0, np.asarray(seeds)))
            beta = beta_of(gamma) if 1.0 <= gamma <= 4.0 else None
            worst = 0.0
            for i, (tr, ys) in enumerate(zip(traces, y_seeds)):
                if beta is not None:
                    lyapunov_AB(tr, beta)
                res = flow_identity_residual(tr, gamma, float(ys))
                worst = max(worst, float(np.max(np.abs(res))))
                write_trace_csv(tr, out / f"trace_{i:03d}.csv")
            if beta is not None:
                summary["monotonicity_ok"] = bool(monotonicity_violation(traces) <= 1.0)
            # relative to max |y0|
            summary["identity_residual_max"] = worst / scale
    _dump_json(summary, out / "summary.json")
    return code


def _beta_table(cfg: dict, out: Path) -> int:
    gammas = sorted(set(float(g) for g in cfg.get("gamma_list", [])))
    if not gammas:
        raise ConfigError("beta-table needs a non-empty gamma_list")
    try:
        rows = [(g, beta_of(g)) for g in gammas]
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    out.mkdir(parents=True, exist_ok=True)
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gamma", "beta"])
        for g, b in rows:
            w.writerow([_fmt(g), _fmt(b)])
    return EXIT_OK


def _sweep_cell(gamma: float, u0, cfg: dict, grid: Grid) -> dict:
    row = {"brandolese_margin": None, "triggered": None, "T_upper": None,
           "estimated_T_star": None, "status": "not_run"}
    if 1.0 <= gamma <= 4.0:
        v = criteria.brandolese(u0, gamma)
        row["brandolese_margin"] = v.margin
        row["triggered"] = v.triggered
        if v.triggered:
            row["T_upper"] = criteria.blowup_bound(u0, gamma, v.witness).T_upper
    if "solver" in cfg and u0.smooth:
        result = run(_sim_config(cfg, gamma, grid), u0)
        row["estimated_T_star"] = result.estimated_T_star
        row["status"] = result.status
    return row


def sweep(cfg: dict, out: Path) -> int:
    if cfg.get("flavor", "criteria") == "beta-table":
        return _beta_table(cfg, out)
    _require(cfg, "grid", "gamma_list", "profile_list", command="sweep")
    grid = _grid(cfg)
    profiles = []
    for i, entry in enumerate(cfg["profile_list"]):
        pid = entry.get("id", f"{entry['kind']}_{i}")
        profiles.append((pid, _profile_of(entry, grid)))
    ids = [p for p, _ in profiles]
    if len(set(ids)) != len(ids):
        raise ConfigError("profile ids must be unique")
    cells = sorted(((float(g), pid, u0) for g in cfg["gamma_list"] for pid, u0 in profiles),
                   key=lambda c: (c[0], c[1]))
    rows, code = [], EXIT_OK
    # cells are independent; run in sorted order so output is deterministic
    for gamma, pid, u0 in cells:
        r = _sweep_cell(gamma, u0, cfg, grid)
        if r["status"] == FAILURE:
            code = EXIT_NUMERICAL
        rows.append((gamma, pid, r))
    out.mkdir(parents=True, exist_ok=True)
    cols = ["brandolese_margin", "triggered", "T_upper", "estimated_T_star", "status"]
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gamma", "profile_id"] + cols)
        for gamma, pid, r in rows:
            w.writerow([_fmt(gamma), pid] + [_fmt(r[c]) for c in cols])
    return code


COMMANDS = {"analyze": analyze, "simulate": simulate, "sweep": sweep}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rodbreak", description="Wave-breaking diagnostics for the rod equation.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (defaults to output_dir from the config)")
    p.add_argument("--seed-grid", type=int, metavar="N",
                   help="add N uniformly spaced characteristic seeds (simulate)")
    p.add_argument("--quiet", action="store_true", help="only report errors")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        out = args.out or cfg.get("output_dir")
        if out is None:
            raise ConfigError("no output directory: pass --out or set output_dir")
        if args.seed_grid is not None and args.seed_grid < 1:
            raise ConfigError("--seed-grid must be positive")
        out = Path(out)
        if args.command == "simulate":
            return simulate(cfg, out, args.seed_grid)
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, NonSmoothDataError, criteria.PreconditionError, DomainError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (NumericalFailure, FloatingPointError, OverflowError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
