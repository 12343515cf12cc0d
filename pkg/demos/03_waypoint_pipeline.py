"""From geometry to a flyable reference: shapes, a glyph bitmap, point
ordering, velocity profiles and lift-off arcs. Writes waypoint CSVs into
demo_out/."""

from pathlib import Path

import numpy as np

from dronedraw import (
    data_path,
    figure8,
    glyph_to_path,
    lift_to_reference,
    load_pbm,
    save_waypoints,
    velocity_profile_curvature,
    velocity_profile_finite_diff,
)

OUT = Path("demo_out")


def describe(name, path):
    s = np.linalg.norm(path.velocities, axis=1)
    pen_down = int(path.pen_flags.sum())
    print(f"{name}: {len(path)} points ({pen_down} on the board), "
          f"speed {s.min() * 1e3:.2f}..{s.max() * 1e3:.2f} mm/s")


def main():
    OUT.mkdir(exist_ok=True)

    # analytic figure-8, both profile flavors
    base = figure8(1000, 0.05)
    curv = velocity_profile_curvature(base)
    fd = velocity_profile_finite_diff(base)
    describe("figure-8 / curvature profile ", curv)
    describe("figure-8 / finite-difference ", fd)
    sc = np.linalg.norm(curv.velocities, axis=1)
    print(f"  curvature profile slows {sc.max() / sc.min():.0f}x "
          "into the lobe ends and sprints the straight crossing\n")

    # a two-letter glyph: skeletonize, order the pixels, bridge the
    # stroke gaps with pen-up arcs
    img = load_pbm(data_path("hi.pbm"))
    glyph = glyph_to_path(img, 0.15, 0.15, z_up=0.03)
    glyph = velocity_profile_curvature(glyph)
    describe("glyph 'hi'                   ", glyph)
    hops = np.flatnonzero(~glyph.pen_flags)
    print(f"  {len(hops)} airborne samples bridge the strokes "
          f"(peak lift {glyph.points[:, 2].max() * 1e3:.0f} mm)\n")

    # expand to the 13-state reference the tracker consumes
    ref = lift_to_reference(fd, horizon=75)
    print(f"reference for N = 75: {len(ref)} states "
          f"({len(fd)} drawn + 75 terminal padding)")

    save_waypoints(fd, OUT / "fig8_waypoints.csv")
    save_waypoints(glyph, OUT / "hi_waypoints.csv")
    print(f"wrote {OUT}/fig8_waypoints.csv and {OUT}/hi_waypoints.csv")


if __name__ == "__main__":
    main()
