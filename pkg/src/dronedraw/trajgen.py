"""Waypoint trajectory generation for board drawings.

Sources: analytic shapes (figure-8, circle), CSV point lists normalized onto
the board, and binary glyph bitmaps run through skeletonization plus a TSP
ordering pass. On top of the geometry sit two velocity profiles (inverse
curvature, central finite difference), lift-off insertion for multi-stroke
drawings, and the lift into full 13-state references the tracker consumes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .model import NX
from .thinning import load_pbm, save_pbm, skeletonize  # noqa: F401  (glyph pipeline surface)

KAPPA_FLOOR = 1e-2     # 1/m, caps the speed of dead-straight sections
KAPPA_STRAIGHT = 0.5   # 1/m, below this a section counts as straight
V_CAP_DEFAULT = 0.01   # m/s

WAYPOINT_HEADER = ["x", "y", "z", "vx", "vy", "vz", "pen"]


@dataclass(frozen=True)
class WaypointPath:
    """Ordered board-frame waypoints. z = 0 means pen on the board."""

    points: np.ndarray                   # (n, 3) meters
    dt: float                            # inter-point time, s
    velocities: np.ndarray | None = None  # (n, 3) m/s
    pen_flags: np.ndarray | None = None   # (n,) bool, True = in contact

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
            raise ValueError("points must be (n, 3) with n >= 2")
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite waypoint")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "points", pts)
        if self.velocities is not None:
            vel = np.asarray(self.velocities, dtype=float)
            if vel.shape != pts.shape:
                raise ValueError("velocities must match points in shape")
            object.__setattr__(self, "velocities", vel)
        pen = self.pen_flags
        pen = np.ones(len(pts), dtype=bool) if pen is None \
            else np.asarray(pen, dtype=bool)
        if pen.shape != (len(pts),):
            raise ValueError("pen_flags must have one entry per point")
        object.__setattr__(self, "pen_flags", pen)
        for arr in (self.points, self.velocities, self.pen_flags):
            if arr is not None:
                arr.flags.writeable = False

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Full 13-state desired trajectory: identity attitude, zero rates,
    position and velocity from the waypoints, tail padded with the terminal
    state so the receding horizon never runs off the end."""

    states: np.ndarray     # (n, 13)
    dt: float

    def __post_init__(self):
        st = np.asarray(self.states, dtype=float)
        if st.ndim != 2 or st.shape[1] != NX:
            raise ValueError(f"states must be (n, {NX})")
        object.__setattr__(self, "states", st)
        st.flags.writeable = False

    def __len__(self):
        return len(self.states)


def figure8(n_points: int, half_width: float, center=(0.0, 0.0, 0.0),
            dt: float = 0.01) -> WaypointPath:
    """Gerono lemniscate x = a sin t, y = a sin t cos t, sampled uniformly
    over [0, 2pi) so the last point wraps around next to the first."""
    if n_points < 8:
        raise ValueError("n_points must be at least 8")
    cx, cy, cz = (tuple(center) + (0.0, 0.0))[:3]
    t = np.linspace(0.0, 2.0 * math.pi, n_points, endpoint=False)
    pts = np.column_stack([
        cx + half_width * np.sin(t),
        cy + half_width * np.sin(t) * np.cos(t),
        np.full(n_points, cz),
    ])
    return WaypointPath(points=pts, dt=dt)


def circle(n_points: int, radius: float, center=(0.0, 0.0, 0.0),
           dt: float = 0.01) -> WaypointPath:
    if n_points < 8:
        raise ValueError("n_points must be at least 8")
    cx, cy, cz = (tuple(center) + (0.0, 0.0))[:3]
    t = np.linspace(0.0, 2.0 * math.pi, n_points, endpoint=False)
    pts = np.column_stack([
        cx + radius * np.cos(t),
        cy + radius * np.sin(t),
        np.full(n_points, cz),
    ])
    return WaypointPath(points=pts, dt=dt)


def normalize_to_board(points_xy, board_width: float, board_height: float,
                       center=(0.0, 0.0)) -> np.ndarray:
    """Uniformly scale and translate 2D points so their bounding box fits
    the board rectangle, aspect ratio preserved, box center at center."""
    pts = np.asarray(points_xy, dtype=float)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = hi - lo
    if span.max() <= 0.0:
        raise ValueError("degenerate input: all points identical")
    scales = []
    if span[0] > 0.0:
        scales.append(board_width / span[0])
    if span[1] > 0.0:
        scales.append(board_height / span[1])
    s = min(scales)
    mid = 0.5 * (lo + hi)
    return (pts - mid) * s + np.asarray(center[:2], dtype=float)


def load_points_csv(path, board_width: float, board_height: float,
                    center=(0.0, 0.0), dt: float = 0.01) -> WaypointPath:
    """Read two-column x,y rows and normalize them onto the board (z = 0).

    A header row is skipped if its first field is not numeric. Bad rows
    raise with their line number.
    """
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            fields = [f.strip() for f in row if f.strip()]
            if not fields:
                continue
            try:
                vals = [float(f) for f in fields[:2]]
            except ValueError:
                if lineno == 1:
                    continue   # header
                raise ValueError(
                    f"{path}:{lineno}: non-numeric value in {fields!r}"
                ) from None
            if len(vals) < 2:
                raise ValueError(f"{path}:{lineno}: expected two columns")
            rows.append(vals)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 point rows")
    xy = normalize_to_board(np.array(rows), board_width, board_height, center)
    pts = np.column_stack([xy, np.zeros(len(xy))])
    return WaypointPath(points=pts, dt=dt)


def glyph_to_points(img) -> np.ndarray:
    """Skeletonize a glyph bitmap and return the ink pixels as 2D points in
    math orientation (y grows upward), ready for tsp_order."""
    skel = skeletonize(img)
    rr, cc = np.nonzero(skel)
    if rr.size == 0:
        raise ValueError("glyph has no ink after skeletonization")
    return np.column_stack([cc.astype(float),
                            (skel.shape[0] - 1 - rr).astype(float)])


JUMP_PIXELS = 5.0


def detect_jumps(points, threshold: float = JUMP_PIXELS):
    """Pairs (i, i+1) where consecutive ordered points sit farther apart
    than threshold; for glyph paths this flags hops between skeleton
    branches that need a pen-up detour."""
    gaps = np.linalg.norm(np.diff(np.asarray(points, dtype=float), axis=0),
                          axis=1)
    return [(int(i), int(i) + 1) for i in np.nonzero(gaps > threshold)[0]]


def glyph_to_path(img, board_width: float, board_height: float,
                  center=(0.0, 0.0), dt: float = 0.01,
                  z_up: float = 0.03) -> WaypointPath:
    """Full glyph pipeline: skeletonize, order the ink pixels with TSP,
    detect branch hops in pixel space, scale onto the board, and bridge the
    hops with pen-up lift arcs."""
    px = glyph_to_points(img)
    order = tsp_order(px)
    ordered = px[order]
    breaks = detect_jumps(ordered)
    xy = normalize_to_board(ordered, board_width, board_height, center)
    path = WaypointPath(points=np.column_stack([xy, np.zeros(len(xy))]),
                        dt=dt)
    return insert_liftoff(path, breaks, z_up)


def _path_length(points, order) -> float:
    p = points[order]
    return float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum())


_EXACT_TSP_MAX = 12


def _held_karp_open(D: np.ndarray) -> np.ndarray:
    """Exact shortest open path over all points (free endpoints), by the
    subset DP. Only used for small n; cost grows as 2^n * n^2."""
    n = len(D)
    full = 1 << n
    dp = np.full((full, n), np.inf)
    parent = np.full((full, n), -1, dtype=int)
    for i in range(n):
        dp[1 << i, i] = 0.0
    for mask in range(1, full):
        row = dp[mask]
        active = np.nonzero(np.isfinite(row))[0]
        if active.size == 0:
            continue
        for j in range(n):
            if mask & (1 << j):
                continue
            cand = row[active] + D[active, j]
            k = int(np.argmin(cand))
            nxt = mask | (1 << j)
            if cand[k] < dp[nxt, j]:
                dp[nxt, j] = cand[k]
                parent[nxt, j] = active[k]
    last = int(np.argmin(dp[full - 1]))
    order = [last]
    mask = full - 1
    while parent[mask, order[-1]] >= 0:
        prev = parent[mask, order[-1]]
        mask ^= 1 << order[-1]
        order.append(int(prev))
    return np.array(order[::-1])


def tsp_order(points) -> np.ndarray:
    """Visit order over the points as an index permutation.

    Small instances are solved exactly by subset DP; larger ones get greedy
    nearest neighbor from the leftmost-lowest point plus 2-opt to
    convergence. The tour is an open path, equivalent to a closed tour
    through a virtual depot at zero distance from everything, so 2-opt
    includes prefix and suffix reversals (one reconnected edge touches the
    depot and costs nothing). Either way the result starts at the end
    nearer the leftmost-lowest point.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 1:
        raise ValueError("points must be a non-empty 2D array")
    n = len(pts)
    if n == 1:
        return np.array([0])

    D = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    if n <= _EXACT_TSP_MAX:
        order = _held_karp_open(D)
        start = int(np.lexsort((pts[:, 1], pts[:, 0]))[0])
        if D[order[-1], start] < D[order[0], start]:
            order = order[::-1]
        return order
    start = int(np.lexsort((pts[:, 1], pts[:, 0]))[0])
    order = [start]
    remaining = set(range(n)) - {start}
    while remaining:
        last = order[-1]
        rem = np.fromiter(remaining, dtype=int)
        nxt = int(rem[np.argmin(D[last, rem])])
        order.append(nxt)
        remaining.remove(nxt)
    order = np.array(order)

    # 2-opt, best improvement per sweep: reversing order[i..j] changes only
    # the edge entering i and the edge leaving j, either of which vanishes
    # when the reversed block touches a path endpoint.
    improved = True
    while improved:
        improved = False
        p = order
        best_gain = -1e-12
        best = None
        for i in range(0, n - 1):
            j = np.arange(i + 1, n)
            jn = p[np.minimum(j + 1, n - 1)]
            tail_before = np.where(j + 1 < n, D[p[j], jn], 0.0)
            tail_after = np.where(j + 1 < n, D[p[i], jn], 0.0)
            if i > 0:
                before = D[p[i - 1], p[i]] + tail_before
                after = D[p[i - 1], p[j]] + tail_after
            else:
                before = tail_before
                after = tail_after
            gains = before - after
            k = int(np.argmax(gains))
            if gains[k] > best_gain:
                best_gain = float(gains[k])
                best = (i, int(j[k]))
        if best is not None and best_gain > 1e-12:
            i, j = best
            order = np.concatenate([order[:i], order[i:j + 1][::-1],
                                    order[j + 1:]])
            improved = True
    return order


def menger_curvature(a, b, c) -> float:
    """Inverse circumradius of the triangle (a, b, c); zero when collinear."""
    a, b, c = (np.pad(np.asarray(p, dtype=float), (0, 3))[:3]
               for p in (a, b, c))
    ab = np.linalg.norm(b - a)
    bc = np.linalg.norm(c - b)
    ca = np.linalg.norm(a - c)
    denom = ab * bc * ca
    if denom == 0.0:
        return float("nan")
    cross = np.cross(b - a, c - a)
    area2 = float(np.linalg.norm(cross))   # twice the triangle area
    return 2.0 * area2 / denom


def _exact_cap(velocities: np.ndarray, v_cap: float) -> np.ndarray:
    """Rescale velocity rows so the largest Euclidean norm lands on v_cap,
    nudging up to a few times to absorb the last-ulp rounding of norm()."""
    vel = np.array(velocities, dtype=float)
    for _ in range(4):
        speeds = np.linalg.norm(vel, axis=1)
        smax = speeds.max()
        if smax == 0.0:
            raise ValueError("cannot scale an all-zero velocity profile")
        if smax == v_cap:
            break
        vel *= v_cap / smax
    return vel


def velocity_profile_curvature(path: WaypointPath, v_cap: float = V_CAP_DEFAULT,
                               v_straight_boost: float = 2.0) -> WaypointPath:
    """Assign speeds inversely proportional to local Menger curvature.

    Straight sections (curvature under KAPPA_STRAIGHT) get an extra boost
    factor before the global rescale to v_cap; KAPPA_FLOOR keeps the inverse
    bounded. Directions follow the central chord; the two endpoints copy
    their neighbor's velocity.
    """
    pts = path.points
    n = len(pts)
    if n < 3:
        raise ValueError("need at least 3 points for a curvature profile")
    kappa = np.empty(n)
    for i in range(1, n - 1):
        k = menger_curvature(pts[i - 1], pts[i], pts[i + 1])
        kappa[i] = KAPPA_FLOOR if math.isnan(k) else k
    kappa[0] = kappa[1]
    kappa[-1] = kappa[-2]

    speeds = 1.0 / (kappa + KAPPA_FLOOR)
    speeds[kappa < KAPPA_STRAIGHT] *= v_straight_boost

    chords = pts[2:] - pts[:-2]
    norms = np.linalg.norm(chords, axis=1)
    dirs = np.zeros_like(pts)
    ok = norms > 0.0
    dirs[1:-1][ok] = chords[ok] / norms[ok, None]
    vel = dirs * speeds[:, None]
    vel[0] = vel[1]
    vel[-1] = vel[-2]
    return replace(path, velocities=_exact_cap(vel, v_cap))


def velocity_profile_finite_diff(path: WaypointPath,
                                 v_cap: float = V_CAP_DEFAULT) -> WaypointPath:
    """Central-difference velocities (one-sided at the ends), rescaled so
    the fastest point moves at exactly v_cap."""
    pts = path.points
    if len(pts) < 2:
        raise ValueError("need at least 2 points")
    vel = np.empty_like(pts)
    vel[1:-1] = (pts[2:] - pts[:-2]) / (2.0 * path.dt)
    vel[0] = (pts[1] - pts[0]) / path.dt
    vel[-1] = (pts[-1] - pts[-2]) / path.dt
    return replace(path, velocities=_exact_cap(vel, v_cap))


def insert_liftoff(path: WaypointPath, segment_breaks, z_up: float) -> WaypointPath:
    """Bridge each (end, start) index pair with an off-board arc: rise to
    z_up above the end point, translate, descend onto the start point. The
    inserted points carry pen_flags False; original points are untouched.

    Arc spacing matches the median chord length of the input path, so the
    detour moves at a pace similar to the drawing itself.
    """
    breaks = [(int(i), int(j)) for i, j in segment_breaks]
    if not breaks:
        return path
    n = len(path)
    prev_end = -1
    for i, j in breaks:
        if not (0 <= i < j < n):
            raise ValueError(f"break ({i}, {j}) out of order or out of range")
        if i < prev_end:
            raise ValueError(f"break ({i}, {j}) overlaps the previous break")
        prev_end = j

    chords = np.linalg.norm(np.diff(path.points, axis=0), axis=1)
    nz = chords[chords > 0.0]
    ds = float(np.median(nz)) if nz.size else z_up / 4.0

    pts_out = []
    pen_out = []
    cursor = 0
    for i, j in breaks:
        pts_out.append(path.points[cursor:i + 1])
        pen_out.append(path.pen_flags[cursor:i + 1])
        a = path.points[i]
        b = path.points[j]
        n_rise = max(2, math.ceil(z_up / ds))
        horiz = float(np.linalg.norm(b[:2] - a[:2]))
        rise = np.linspace(a[2], z_up, n_rise + 1)[1:]
        arc = [np.array([a[0], a[1], z]) for z in rise]
        if horiz > 0.0:
            n_tr = max(1, math.ceil(horiz / ds))
            for s in np.linspace(0.0, 1.0, n_tr + 1)[1:]:
                xy = (1 - s) * a[:2] + s * b[:2]
                arc.append(np.array([xy[0], xy[1], z_up]))
        desc = np.linspace(z_up, b[2], n_rise + 1)[1:-1]
        arc.extend(np.array([b[0], b[1], z]) for z in desc)
        pts_out.append(np.array(arc))
        pen_out.append(np.zeros(len(arc), dtype=bool))
        cursor = j
    pts_out.append(path.points[cursor:])
    pen_out.append(path.pen_flags[cursor:])

    return WaypointPath(points=np.vstack(pts_out), dt=path.dt,
                        pen_flags=np.concatenate(pen_out))


def resample_path(path: WaypointPath, n_points: int) -> WaypointPath:
    """Redistribute the path over n_points at uniform arc length. Pen flags
    follow the nearest original sample; velocities are dropped (profile
    afterwards)."""
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    pts = path.points
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total == 0.0:
        raise ValueError("cannot resample a zero-length path")
    si = np.linspace(0.0, total, n_points)
    out = np.column_stack([np.interp(si, s, pts[:, k]) for k in range(3)])
    nearest = np.searchsorted(s, si)
    nearest = np.clip(nearest, 0, len(pts) - 1)
    pen = path.pen_flags[nearest]
    return WaypointPath(points=out, dt=path.dt, pen_flags=pen)


def lift_to_reference(path: WaypointPath, horizon: int) -> ReferenceTrajectory:
    """Expand waypoints into 13-state targets (identity quaternion, zero
    body rates) and pad the tail with `horizon` copies of the final state so
    a receding window of that length always has targets to look at."""
    if path.velocities is None:
        raise ValueError("path has no velocities; run a profile first")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    n = len(path)
    states = np.zeros((n + horizon, NX))
    states[:n, 0:3] = path.points
    states[:, 3] = 1.0
    states[:n, 7:10] = path.velocities
    states[n:, :] = states[n - 1]
    return ReferenceTrajectory(states=states, dt=path.dt)


def save_waypoints(path: WaypointPath, filename) -> None:
    """Write waypoints as CSV with header x,y,z,vx,vy,vz,pen. Floats use 17
    significant digits so a reload reproduces them exactly."""
    vel = path.velocities
    if vel is None:
        vel = np.zeros_like(path.points)
    with open(filename, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(WAYPOINT_HEADER)
        for p, v, pen in zip(path.points, vel, path.pen_flags):
            writer.writerow([format(c, ".17g") for c in (*p, *v)]
                            + [int(pen)])


def load_waypoints(filename, dt: float) -> WaypointPath:
    with open(filename, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != WAYPOINT_HEADER:
            raise ValueError(f"{filename}: expected header "
                             + ",".join(WAYPOINT_HEADER))
        pts, vel, pen = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise ValueError(f"{filename}:{lineno}: expected 7 columns")
            try:
                vals = [float(c) for c in row[:6]]
                pen.append(bool(int(row[6])))
            except ValueError:
                raise ValueError(
                    f"{filename}:{lineno}: non-numeric value") from None
            pts.append(vals[:3])
            vel.append(vals[3:])
    if len(pts) < 2:
        raise ValueError(f"{filename}: need at least 2 waypoints")
    return WaypointPath(points=np.array(pts), dt=dt,
                        velocities=np.array(vel),
                        pen_flags=np.array(pen, dtype=bool))
