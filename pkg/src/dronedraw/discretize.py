"""Discrete-time tools built on the continuous model: RK4 stepping, hover
trim, finite-difference linearization, and the discrete LQR pieces used to
sanity-check closed-loop stability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    NU,
    NX,
    QUAT,
    ModelParams,
    continuous_dynamics,
    magnet_force,
)


def rk4_step(x, u, dt, p: ModelParams) -> np.ndarray:
    """One classical Runge-Kutta step, with the quaternion renormalized
    before returning so repeated stepping cannot drift off the unit sphere."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    k1 = continuous_dynamics(x, u, p)
    k2 = continuous_dynamics(x + 0.5 * dt * k1, u, p)
    k3 = continuous_dynamics(x + 0.5 * dt * k2, u, p)
    k4 = continuous_dynamics(x + dt * k3, u, p)
    xn = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    xn[QUAT] /= np.linalg.norm(xn[QUAT])
    return xn


def hover_equilibrium(p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Level hover on the board: identity attitude, zero rates, and equal
    motor commands lifting weight plus whatever the magnet adds at z=0."""
    xbar = np.zeros(NX)
    xbar[3] = 1.0
    pull = -magnet_force(np.zeros(3), p)[2]
    ubar = np.full(NU, (p.mass * p.gravity + pull) / (4.0 * p.thrust_coeff))
    return xbar, ubar


def linearize(x0, u0, dt, p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference Jacobians of the discrete step about (x0, u0).

    Differences go through rk4_step itself, renormalization included, so the
    returned A has no spurious neutral direction along the quaternion norm.
    """
    x0 = np.asarray(x0, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    A = np.empty((NX, NX))
    B = np.empty((NX, NU))
    for i in range(NX):
        h = max(1e-6, 1e-6 * abs(x0[i]))
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += h
        xm[i] -= h
        A[:, i] = (rk4_step(xp, u0, dt, p) - rk4_step(xm, u0, dt, p)) / (2 * h)
    for j in range(NU):
        h = max(1e-6, 1e-6 * abs(u0[j]))
        up = u0.copy()
        um = u0.copy()
        up[j] += h
        um[j] -= h
        B[:, j] = (rk4_step(x0, up, dt, p) - rk4_step(x0, um, dt, p)) / (2 * h)
    return A, B


@dataclass(frozen=True)
class LinearModel:
    """Discrete linearization bundled with its expansion point."""

    A: np.ndarray
    B: np.ndarray
    xbar: np.ndarray
    ubar: np.ndarray
    dt: float

    def __post_init__(self):
        for name, arr in (("A", self.A), ("B", self.B),
                          ("xbar", self.xbar), ("ubar", self.ubar)):
            a = np.asarray(arr, dtype=float)
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        if self.A.shape != (NX, NX) or self.B.shape != (NX, NU):
            raise ValueError("A must be 13x13 and B 13x4")


def linearize_hover(dt, p: ModelParams) -> LinearModel:
    xbar, ubar = hover_equilibrium(p)
    A, B = linearize(xbar, ubar, dt, p)
    return LinearModel(A=A, B=B, xbar=xbar, ubar=ubar, dt=dt)


def _write_block(fh, label, arr):
    fh.write(label + "\n")
    for row in np.atleast_2d(arr):
        fh.write(" ".join(format(v, ".17g") for v in row) + "\n")


def save_linear_model(model: LinearModel, path) -> None:
    """Write the model as labeled row-major text blocks (A, B, XBAR, UBAR,
    DT). 17 significant digits, so load_linear_model round-trips exactly."""
    with open(path, "w") as fh:
        _write_block(fh, "A", model.A)
        _write_block(fh, "B", model.B)
        _write_block(fh, "XBAR", model.xbar)
        _write_block(fh, "UBAR", model.ubar)
        _write_block(fh, "DT", np.array([model.dt]))


def load_linear_model(path) -> LinearModel:
    blocks = {}
    label = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line in ("A", "B", "XBAR", "UBAR", "DT"):
                label = line
                blocks[label] = []
                continue
            if label is None:
                raise ValueError(f"{path}:{lineno}: data before any block label")
            try:
                blocks[label].append([float(tok) for tok in line.split()])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    missing = [k for k in ("A", "B", "XBAR", "UBAR", "DT") if k not in blocks]
    if missing:
        raise ValueError(f"{path}: missing blocks {missing}")
    return LinearModel(
        A=np.array(blocks["A"]),
        B=np.array(blocks["B"]),
        xbar=np.array(blocks["XBAR"]).ravel(),
        ubar=np.array(blocks["UBAR"]).ravel(),
        dt=float(blocks["DT"][0][0]),
    )


def dlqr_gain(A, B, Q, R, tol=1e-10, max_iter=10000):
    """Infinite-horizon discrete LQR via Riccati fixed-point iteration.

    Returns (K, P) with u = -K dx. Raises if the iteration has not settled
    to tol in the infinity norm within max_iter sweeps.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    P = Q.copy()
    for _ in range(max_iter):
        K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        Pn = Q + A.T @ P @ (A - B @ K)
        Pn = 0.5 * (Pn + Pn.T)
        delta = np.abs(Pn - P).max()
        P = Pn
        if delta < tol:
            K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
            return K, P
    raise RuntimeError(
        f"Riccati iteration did not converge: delta {delta:.3e} after "
        f"{max_iter} sweeps (tol {tol:.1e})")


def spectral_radius(M) -> float:
    return float(np.abs(np.linalg.eigvals(np.asarray(M, dtype=float))).max())
