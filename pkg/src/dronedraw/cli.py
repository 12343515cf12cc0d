"""Command-line front end for the drawing pipeline.

Subcommands:
  generate   input geometry -> profiled waypoint CSV
  optimize   waypoints -> closed-loop MPC simulation -> full-state CSV + metrics JSON
  metrics    compare two trajectory CSVs -> error metrics JSON
  check      hover equilibrium and closed-loop eigenvalue report

Exit codes: 0 ok, 2 input error, 3 stability-check failure, 4 solver failure.
Parameter precedence: command-line flags > --config file > built-in defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import presets as pz
from .discretize import dlqr_gain, hover_equilibrium, linearize_hover, spectral_radius
from .model import ModelParams, _CONFIG_KEYS as MODEL_KEYS
from .mpc import (
    FULLSTATE_HEADER,
    SimulationError,
    export_fullstate_csv,
    load_fullstate_csv,
    metrics_summary,
    run_simulation,
)
from .qp import MpcConfig
from .thinning import load_pbm
from .trajgen import (
    WAYPOINT_HEADER,
    circle,
    figure8,
    glyph_to_path,
    lift_to_reference,
    load_points_csv,
    load_waypoints,
    resample_path,
    save_waypoints,
)

MPC_KEYS = ("horizon", "max_dev_pos", "max_dev_quat", "max_dev_vel",
            "max_dev_rate", "max_dev_u", "qf_scale", "u_min", "u_max",
            "solver_tol", "solver_max_iter")
PIPELINE_KEYS = ("board_w", "board_h", "center_x", "center_y", "dt",
                 "v_cap", "z_up", "profile")
INPUT_FLAGS = ("shape", "csv", "glyph", "preset", "waypoints")


class InputError(Exception):
    """Bad arguments, unreadable file, or malformed data: exit code 2."""


def read_config_file(path) -> dict:
    """Flat key = value text. Only documented model / controller / pipeline
    keys are accepted."""
    allowed = set(MODEL_KEYS) | set(MPC_KEYS) | set(PIPELINE_KEYS)
    out = {}
    p = Path(path)
    if not p.exists():
        raise InputError(f"config file not found: {path}")
    for lineno, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        key, val = key.strip(), val.strip()
        if key not in allowed:
            raise InputError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = val
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dronedraw",
        description="Quadrotor board-drawing trajectory tools")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", metavar="FILE",
                        help="flat key=value parameter file")
        sp.add_argument("--dt", type=float, default=None,
                        help="step time, s (default 0.01)")
        sp.add_argument("--magnet", choices=("on", "off", "gated"),
                        default=None, help="pen magnet mode (default on)")

    def add_input(sp):
        sp.add_argument("--shape", choices=("fig8", "circle"))
        sp.add_argument("--csv", metavar="FILE", help="two-column x,y points")
        sp.add_argument("--glyph", metavar="FILE", help="PBM bitmap (P1/P4)")
        sp.add_argument("--preset", choices=sorted(pz.PRESETS),
                        help="shipped scenario")
        sp.add_argument("--points", type=int, default=None,
                        help="waypoint count")
        sp.add_argument("--board-w", type=float, default=None,
                        help="board width, m (default 0.15)")
        sp.add_argument("--board-h", type=float, default=None,
                        help="board height, m (default 0.15)")
        sp.add_argument("--center", metavar="X,Y", default=None,
                        help="board center (default 0,0)")
        sp.add_argument("--profile", choices=("curvature", "finite-diff"),
                        default=None, help="velocity profile method")

    sp = sub.add_parser("generate", help="produce a waypoint CSV")
    add_common(sp)
    add_input(sp)
    sp.add_argument("--out", required=True, metavar="FILE",
                    help="output waypoint CSV")

    sp = sub.add_parser("optimize",
                        help="simulate MPC tracking of a trajectory")
    add_common(sp)
    add_input(sp)
    sp.add_argument("--waypoints", metavar="FILE",
                    help="pre-generated waypoint CSV to track")
    sp.add_argument("--horizon", type=int, default=None,
                    help="MPC horizon length (default 20 or preset value)")
    sp.add_argument("--out", required=True, metavar="DIR",
                    help="output directory for fullstate.csv + metrics.json")

    sp = sub.add_parser("metrics", help="tracking error between two CSVs")
    sp.add_argument("reference", help="waypoint or full-state CSV")
    sp.add_argument("actual", help="waypoint or full-state CSV")
    sp.add_argument("--out", metavar="FILE", default=None,
                    help="write JSON here instead of stdout")

    sp = sub.add_parser("check",
                        help="hover equilibrium and eigenvalue report")
    add_common(sp)
    sp.add_argument("--horizon", type=int, default=None)
    return ap


def _merge(flag_value, cfg: dict, key: str, default, cast=float):
    if flag_value is not None:
        return flag_value
    if key in cfg:
        return cast(cfg[key])
    return default


def resolve_model(args, cfg: dict) -> ModelParams:
    kwargs = {}
    inertia = list(ModelParams.inertia)
    for key in MODEL_KEYS:
        if key not in cfg:
            continue
        if key == "magnet_mode":
            kwargs[key] = cfg[key].replace("_", "-")
        elif key.startswith("inertia_"):
            inertia[("inertia_xx", "inertia_yy", "inertia_zz").index(key)] = \
                float(cfg[key])
        else:
            kwargs[key] = float(cfg[key])
    kwargs["inertia"] = tuple(inertia)
    magnet = getattr(args, "magnet", None)
    if magnet == "off":
        kwargs["magnet_force"] = 0.0
        kwargs["magnet_mode"] = "always-on"
    elif magnet == "on":
        kwargs["magnet_mode"] = "always-on"
    elif magnet == "gated":
        kwargs["magnet_mode"] = "contact-gated"
    try:
        return ModelParams(**kwargs)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def resolve_mpc(args, cfg: dict, preset) -> MpcConfig:
    horizon = getattr(args, "horizon", None)
    if horizon is None and "horizon" in cfg:
        horizon = int(cfg["horizon"])
    if horizon is None:
        horizon = preset.horizon if preset is not None else MpcConfig.horizon
    kwargs = {"horizon": int(horizon)}
    for key in MPC_KEYS[1:]:
        if key in cfg:
            kwargs[key] = int(cfg[key]) if key == "solver_max_iter" \
                else float(cfg[key])
    try:
        return MpcConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None


def resolve_pipeline(args, cfg: dict) -> dict:
    center = getattr(args, "center", None)
    if center is not None:
        try:
            cx, cy = (float(v) for v in center.split(","))
        except ValueError:
            raise InputError(f"--center expects X,Y, got {center!r}") from None
    else:
        cx = float(cfg.get("center_x", 0.0))
        cy = float(cfg.get("center_y", 0.0))
    return {
        "board_w": _merge(getattr(args, "board_w", None), cfg, "board_w",
                          pz.BOARD_W),
        "board_h": _merge(getattr(args, "board_h", None), cfg, "board_h",
                          pz.BOARD_H),
        "center": (cx, cy),
        "dt": _merge(args.dt, cfg, "dt", pz.DT_DEFAULT),
        "v_cap": float(cfg.get("v_cap", 0.01)),
        "z_up": float(cfg.get("z_up", pz.Z_UP)),
        "profile": _merge(getattr(args, "profile", None), cfg, "profile",
                          "finite-diff", cast=str),
    }


def provenance_block(params: ModelParams, mpc: MpcConfig | None,
                     pipeline: dict | None, extra: dict | None = None) -> dict:
    config = {}
    for key in MODEL_KEYS:
        if key.startswith("inertia_"):
            idx = ("inertia_xx", "inertia_yy", "inertia_zz").index(key)
            config[key] = params.inertia[idx]
        else:
            config[key] = getattr(params, key)
    if mpc is not None:
        for key in MPC_KEYS:
            config[key] = getattr(mpc, key)
    if pipeline is not None:
        for key, val in pipeline.items():
            config[key] = list(val) if isinstance(val, tuple) else val
    if extra:
        config.update(extra)
    canon = json.dumps(config, sort_keys=True)
    return {
        "config_hash": "sha256:" + hashlib.sha256(canon.encode()).hexdigest(),
        "config": config,
    }


def _selected_input(args) -> str:
    chosen = [f for f in INPUT_FLAGS if getattr(args, f, None)]
    if len(chosen) != 1:
        raise InputError(
            "exactly one input among --shape/--csv/--glyph/--preset"
            + ("/--waypoints" if hasattr(args, "waypoints") else "")
            + " is required")
    return chosen[0]


def make_waypoint_path(args, pipe: dict):
    """Build the profiled WaypointPath the arguments select. Returns
    (path, preset_or_None, input description)."""
    kind = _selected_input(args)
    dt = pipe["dt"]
    if kind == "preset":
        preset = pz.PRESETS[args.preset]
        return (pz.build_path(preset, dt=dt, v_cap=pipe["v_cap"]),
                preset, f"preset:{args.preset}")

    if kind == "shape":
        n = args.points if args.points else 1000
        size = min(pipe["board_w"], pipe["board_h"]) / 3.0
        c3 = (*pipe["center"], 0.0)
        try:
            path = (figure8(n, size, center=c3, dt=dt) if args.shape == "fig8"
                    else circle(n, size, center=c3, dt=dt))
        except ValueError as exc:
            raise InputError(str(exc)) from None
        desc = f"shape:{args.shape}"
    elif kind == "csv":
        try:
            path = load_points_csv(args.csv, pipe["board_w"], pipe["board_h"],
                                   center=pipe["center"], dt=dt)
        except (OSError, ValueError) as exc:
            raise InputError(str(exc)) from None
        if args.points:
            path = resample_path(path, args.points)
        desc = f"csv:{Path(args.csv).name}"
    else:  # glyph
        try:
            img = load_pbm(args.glyph)
            path = glyph_to_path(img, pipe["board_w"], pipe["board_h"],
                                 center=pipe["center"], dt=dt,
                                 z_up=pipe["z_up"])
        except (OSError, ValueError) as exc:
            raise InputError(str(exc)) from None
        if args.points:
            path = resample_path(path, args.points)
        desc = f"glyph:{Path(args.glyph).name}"
    path = pz.apply_profile(path, pipe["profile"], pipe["v_cap"])
    return path, None, desc


def stability_report(params: ModelParams, mpc: MpcConfig, dt: float):
    """Hover trim plus LQR closed-loop spectral radius for the linearized
    step. Returns (lines, ok, linear_model)."""
    lm = linearize_hover(dt, params)
    xbar, ubar = hover_equilibrium(params)
    from .discretize import rk4_step
    resid = float(np.abs(rk4_step(xbar, ubar, dt, params) - xbar).max())
    rho_open = spectral_radius(lm.A)
    try:
        K, _ = dlqr_gain(lm.A, lm.B, mpc.Q(), mpc.R())
        rho_closed = spectral_radius(lm.A - lm.B @ K)
        ok = rho_closed < 1.0
    except RuntimeError as exc:
        return [f"LQR stability check failed: {exc}"], False, lm
    lines = [
        f"hover command per motor: {ubar[0]:.9g}",
        f"equilibrium residual: {resid:.3e}",
        f"open-loop spectral radius: {rho_open:.9g}",
        f"closed-loop spectral radius (LQR): {rho_closed:.9g}",
        f"stable: {'yes' if ok else 'no'}",
    ]
    return lines, ok, lm


def cmd_generate(args) -> int:
    cfg = read_config_file(args.config) if args.config else {}
    pipe = resolve_pipeline(args, cfg)
    path, _, _ = make_waypoint_path(args, pipe)
    save_waypoints(path, args.out)
    speeds = np.linalg.norm(path.velocities, axis=1)
    print(f"wrote {args.out}: {len(path)} points, "
          f"max speed {speeds.max():.9g} m/s")
    return 0


def cmd_optimize(args) -> int:
    cfg = read_config_file(args.config) if args.config else {}
    pipe = resolve_pipeline(args, cfg)
    params = resolve_model(args, cfg)

    if getattr(args, "waypoints", None):
        try:
            path = load_waypoints(args.waypoints, pipe["dt"])
        except (OSError, ValueError) as exc:
            raise InputError(str(exc)) from None
        preset, desc = None, f"waypoints:{Path(args.waypoints).name}"
    else:
        path, preset, desc = make_waypoint_path(args, pipe)

    mpc_cfg = resolve_mpc(args, cfg, preset)
    ref = lift_to_reference(path, mpc_cfg.horizon)

    lines, stable, lm = stability_report(params, mpc_cfg, pipe["dt"])
    for line in lines:
        print(line)
    if not stable:
        print("aborting: closed-loop check failed", file=sys.stderr)
        return 3

    try:
        result = run_simulation(ref, lm, mpc_cfg, params)
    except SimulationError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 4

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    export_fullstate_csv(result, outdir / "fullstate.csv")
    summary = metrics_summary(result)
    summary["provenance"] = provenance_block(
        params, mpc_cfg, pipe, {"input": desc, "points": len(path)})
    (outdir / "metrics.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    err = summary["mean_abs_error_m"]
    print(f"wrote {outdir / 'fullstate.csv'} ({len(result.states)} states)")
    print(f"wrote {outdir / 'metrics.json'}: mean |err| "
          f"x={err['x']:.3e} y={err['y']:.3e} z={err['z']:.3e} m")
    return 0


def _read_positions(filename) -> np.ndarray:
    with open(filename) as fh:
        header = [h.strip() for h in fh.readline().split(",")]
    if header == WAYPOINT_HEADER:
        return load_waypoints(filename, dt=1.0).points
    if header == FULLSTATE_HEADER:
        return load_fullstate_csv(filename)[1][:, 0:3]
    raise InputError(f"{filename}: unrecognized CSV header")


def cmd_metrics(args) -> int:
    try:
        ref = _read_positions(args.reference)
        act = _read_positions(args.actual)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    if len(ref) != len(act):
        raise InputError(f"length mismatch: {len(ref)} reference rows vs "
                         f"{len(act)} actual rows")
    diff = act - ref
    out = {
        "mean_abs_error_m": {
            "x": float(np.abs(diff[:, 0]).mean()),
            "y": float(np.abs(diff[:, 1]).mean()),
            "z": float(np.abs(diff[:, 2]).mean()),
        },
        "max_error_m": float(np.linalg.norm(diff, axis=1).max()),
        "steps": int(len(ref) - 1),
    }
    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_check(args) -> int:
    cfg = read_config_file(args.config) if args.config else {}
    pipe = resolve_pipeline(args, cfg)
    params = resolve_model(args, cfg)
    mpc_cfg = resolve_mpc(args, cfg, None)
    lines, ok, _ = stability_report(params, mpc_cfg, pipe["dt"])
    for line in lines:
        print(line)
    return 0 if ok else 3


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "generate": cmd_generate,
        "optimize": cmd_optimize,
        "metrics": cmd_metrics,
        "check": cmd_check,
    }
    try:
        return handlers[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
