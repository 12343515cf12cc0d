"""Shipped drawing scenarios: the bench configurations the tracker is
expected to handle, with their point counts and horizon lengths.

Each preset names an input (analytic shape, packaged point CSV, or packaged
glyph bitmap), a target waypoint count, a velocity-profile method, and the
MPC horizon to track it with. Board geometry defaults live here too.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import trajgen
from .trajgen import (
    ReferenceTrajectory,
    WaypointPath,
    V_CAP_DEFAULT,
    glyph_to_path,
    insert_liftoff,
    lift_to_reference,
    load_pbm,
    load_points_csv,
    resample_path,
)

BOARD_W = 0.15          # drawing board width, m
BOARD_H = 0.15          # drawing board height, m
Z_UP = 0.03             # pen-up travel height, m
FIG8_HALF_WIDTH = 0.05  # m
CIRCLE_RADIUS = 0.05    # m
DT_DEFAULT = 0.01       # s

DATA_DIR = Path(__file__).parent / "data"


def data_path(name: str) -> Path:
    p = DATA_DIR / name
    if not p.exists():
        raise FileNotFoundError(f"packaged data file missing: {p}")
    return p


@dataclass(frozen=True)
class Preset:
    name: str
    kind: str                 # fig8 | circle | csv | glyph
    points: int               # waypoint count after resampling
    horizon: int
    profile: str              # curvature | finite-diff
    data_file: str | None = None
    breaks: tuple = ()        # (end, start) stroke break pairs for csv kind


PRESETS = {
    p.name: p for p in (
        Preset("fig8-1000-N75", "fig8", 1000, 75, "finite-diff"),
        Preset("circle-1000-N75", "circle", 1000, 75, "curvature"),
        Preset("cloud-1000-N20", "csv", 1000, 20, "curvature",
               data_file="cloud.csv"),
        Preset("hi-1001-N20", "glyph", 1001, 20, "curvature",
               data_file="hi.pbm"),
        Preset("human-1582-N20", "csv", 1582, 20, "finite-diff",
               data_file="human.csv",
               breaks=((299, 300), (499, 500), (649, 650),
                       (799, 800), (949, 950))),
    )
}


def apply_profile(path: WaypointPath, method: str,
                  v_cap: float = V_CAP_DEFAULT) -> WaypointPath:
    if method == "curvature":
        return trajgen.velocity_profile_curvature(path, v_cap)
    if method == "finite-diff":
        return trajgen.velocity_profile_finite_diff(path, v_cap)
    raise ValueError(f"unknown profile method {method!r}")


def build_path(preset: Preset, dt: float = DT_DEFAULT,
               v_cap: float = V_CAP_DEFAULT) -> WaypointPath:
    """Waypoints for a preset, profiled and ready to lift into a reference."""
    if preset.kind == "fig8":
        path = trajgen.figure8(preset.points, FIG8_HALF_WIDTH, dt=dt)
    elif preset.kind == "circle":
        path = trajgen.circle(preset.points, CIRCLE_RADIUS, dt=dt)
    elif preset.kind == "csv":
        path = load_points_csv(data_path(preset.data_file), BOARD_W, BOARD_H,
                               dt=dt)
        if preset.breaks:
            path = insert_liftoff(path, preset.breaks, Z_UP)
        path = resample_path(path, preset.points)
    elif preset.kind == "glyph":
        path = glyph_to_path(load_pbm(data_path(preset.data_file)),
                             BOARD_W, BOARD_H, dt=dt, z_up=Z_UP)
        path = resample_path(path, preset.points)
    else:
        raise ValueError(f"unknown preset kind {preset.kind!r}")
    return apply_profile(path, preset.profile, v_cap)


def build_reference(preset: Preset, dt: float = DT_DEFAULT,
                    v_cap: float = V_CAP_DEFAULT) -> ReferenceTrajectory:
    return lift_to_reference(build_path(preset, dt, v_cap), preset.horizon)
