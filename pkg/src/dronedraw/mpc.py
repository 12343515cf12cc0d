"""Receding-horizon simulation: slide the reference window, solve the
tracking QP, push the first control through the nonlinear plant, repeat.

The plant here is the full RK4-integrated rigid-body model, not the
linearization the controller plans with, so recorded histories show the
real closed-loop behavior including friction and magnet load.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .discretize import LinearModel, rk4_step
from .model import NU, NX, ModelParams
from .qp import MpcConfig, MpcController, SolverError
from .trajgen import ReferenceTrajectory

FULLSTATE_HEADER = [
    "t", "x", "y", "z", "qw", "qx", "qy", "qz",
    "vx", "vy", "vz", "wx", "wy", "wz", "ax", "ay", "az",
]


class SimulationError(RuntimeError):
    """A step of the closed-loop simulation failed; carries the step index."""

    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class TrackingErrors:
    mean_abs: np.ndarray      # per-axis mean |position error|, m
    max_norm: float           # largest Euclidean position error, m
    series: np.ndarray        # (n, 3) signed position errors


def tracking_errors(ref: ReferenceTrajectory, states) -> TrackingErrors:
    """Position error statistics of a state history against the (possibly
    padded) reference it tracked."""
    states = np.asarray(states, dtype=float)
    if len(states) > len(ref.states):
        raise ValueError(
            f"history longer than reference ({len(states)} > {len(ref.states)})")
    series = states[:, 0:3] - ref.states[:len(states), 0:3]
    return TrackingErrors(
        mean_abs=np.abs(series).mean(axis=0),
        max_norm=float(np.linalg.norm(series, axis=1).max()),
        series=series,
    )


@dataclass(frozen=True)
class SimResult:
    """Closed-loop history. controls[k] took states[k] to states[k+1], so
    there is one more state than control."""

    states: np.ndarray          # (T, 13)
    controls: np.ndarray        # (T-1, 4) absolute motor commands
    reference: ReferenceTrajectory
    errors: TrackingErrors
    velocity_errors: np.ndarray  # (T, 3)
    iterations: np.ndarray      # per-step QP iteration counts
    residuals: np.ndarray       # per-step QP KKT residuals
    wall_time: float            # seconds spent in the loop

    @property
    def dt(self) -> float:
        return self.reference.dt


def run_simulation(ref: ReferenceTrajectory, lm: LinearModel, cfg: MpcConfig,
                   p: ModelParams, x0=None) -> SimResult:
    """Track ref from x0 (default: the first reference state).

    The reference must already be padded with at least one horizon of
    terminal states; the loop stops when the unpadded part is exhausted,
    with the final windows looking entirely at padding.
    """
    N = cfg.horizon
    total = len(ref.states)
    if total < N + 1:
        raise ValueError("reference shorter than one horizon plus a state")
    T = total - N               # states to record = unpadded length
    x = np.array(ref.states[0] if x0 is None else x0, dtype=float)
    if x.shape != (NX,) or not np.all(np.isfinite(x)):
        raise ValueError("x0 must be a finite 13-vector")

    ctrl = MpcController(lm, cfg)
    states = np.empty((T, NX))
    controls = np.empty((T - 1, NU))
    iters = np.empty(T - 1, dtype=int)
    resid = np.empty(T - 1)
    states[0] = x

    t0 = time.perf_counter()
    for k in range(T - 1):
        window = ref.states[k + 1:k + 1 + N]
        try:
            u = ctrl.step(x, window)
            x = rk4_step(x, u, ref.dt, p)
        except SolverError as exc:
            raise SimulationError(
                k, f"QP solver failed: {exc} "
                f"(residual {exc.residual:.3e})") from exc
        except ValueError as exc:
            raise SimulationError(k, f"integration failed: {exc}") from exc
        controls[k] = u
        iters[k] = ctrl.last.iterations
        resid[k] = ctrl.last.residual
        states[k + 1] = x
    wall = time.perf_counter() - t0

    errs = tracking_errors(ref, states)
    vel_errors = states[:, 7:10] - ref.states[:T, 7:10]
    return SimResult(states=states, controls=controls, reference=ref,
                     errors=errs, velocity_errors=vel_errors,
                     iterations=iters, residuals=resid, wall_time=wall)


def export_fullstate_csv(result: SimResult, path) -> None:
    """Write the state history with time stamps and finite-difference
    accelerations, 9 significant digits throughout.

    Acceleration row k is (v[k+1] - v[k]) / dt; the final row repeats the
    one before it since there is no next velocity to difference against.
    """
    st = result.states
    dt = result.dt
    T = len(st)
    acc = np.zeros((T, 3))
    if T > 1:
        acc[:-1] = np.diff(st[:, 7:10], axis=0) / dt
        acc[-1] = acc[-2]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FULLSTATE_HEADER)
        for k in range(T):
            row = [k * dt, *st[k], *acc[k]]
            writer.writerow([format(v, ".9g") for v in row])


def load_fullstate_csv(path):
    """Read back an exported history as (times, states, accelerations)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != FULLSTATE_HEADER:
            raise ValueError(f"{path}: expected header "
                             + ",".join(FULLSTATE_HEADER))
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(FULLSTATE_HEADER):
                raise ValueError(f"{path}:{lineno}: expected "
                                 f"{len(FULLSTATE_HEADER)} columns")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1:14], arr[:, 14:17]


def metrics_summary(result: SimResult) -> dict:
    """JSON-ready tracking metrics for a finished run."""
    return {
        "mean_abs_error_m": {
            "x": float(result.errors.mean_abs[0]),
            "y": float(result.errors.mean_abs[1]),
            "z": float(result.errors.mean_abs[2]),
        },
        "max_error_m": result.errors.max_norm,
        "steps": int(len(result.controls)),
        "solver_iters_total": int(result.iterations.sum()),
    }
