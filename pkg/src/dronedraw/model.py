"""Rigid-body model of a quadrotor dragging a magnetic pen on a board.

State is a flat 13-vector: position r (world frame, m), attitude quaternion
q (scalar first, unit norm), linear velocity v (world frame, m/s), angular
rate w (body frame, rad/s). Controls are the four per-motor thrust commands.

Two board-contact effects sit on top of the standard rigid body: a constant
downward magnet pull and a sliding-friction force on the board plane. The
friction sign() is smoothed with tanh(v / v_eps) so the model stays
differentiable at hover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

NX = 13
NU = 4

POS = slice(0, 3)
QUAT = slice(3, 7)
VEL = slice(7, 10)
OMEGA = slice(10, 13)

ALWAYS_ON = "always-on"
CONTACT_GATED = "contact-gated"

# lifts a body rate into quaternion-rate coordinates (zero scalar row)
QUAT_H = np.vstack([np.zeros((1, 3)), np.eye(3)])
QUAT_H.flags.writeable = False


@dataclass(frozen=True)
class ModelParams:
    """Physical constants, defaulting to the Crazyflie 2.0 bench values."""

    mass: float = 0.033885            # kg
    inertia: tuple = (1.66e-5, 1.66e-5, 2.93e-5)  # body diagonal, kg m^2
    thrust_coeff: float = 0.147       # thrust per unit motor command, N
    torque_coeff: float = 1.18e-4     # yaw drag per unit motor command, N m
    arm_length: float = 0.046 / math.sqrt(2)  # motor moment arm, m
    gravity: float = 9.8              # m/s^2
    friction_mu: float = 0.35         # sliding friction coefficient
    magnet_force: float = 2.0         # downward pull at the pen, N
    v_eps: float = 0.1                # tanh smoothing scale for sign(v), m/s
    magnet_mode: str = ALWAYS_ON
    z_contact: float = 0.01           # gate height for contact-gated mode, m

    def __post_init__(self):
        if self.magnet_mode not in (ALWAYS_ON, CONTACT_GATED):
            raise ValueError(f"unknown magnet_mode {self.magnet_mode!r}")
        if self.mass <= 0 or self.thrust_coeff <= 0:
            raise ValueError("mass and thrust_coeff must be positive")


_CONFIG_KEYS = (
    "mass", "inertia_xx", "inertia_yy", "inertia_zz", "thrust_coeff",
    "torque_coeff", "arm_length", "gravity", "friction_mu", "magnet_force",
    "v_eps", "magnet_mode", "z_contact",
)


def load_params(path) -> ModelParams:
    """Read ModelParams from a flat key-value file (``key = value`` lines).

    Blank lines and ``#`` comments are ignored. Unknown keys are an error,
    so typos do not silently fall back to defaults.
    """
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, _, val = line.partition("=")
            else:
                parts = line.split(None, 1)
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value'")
                key, val = parts
            key = key.strip()
            val = val.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = val

    kwargs = {}
    inertia = list(ModelParams.inertia)
    for key, val in values.items():
        if key == "magnet_mode":
            kwargs["magnet_mode"] = val.replace("_", "-")
        elif key.startswith("inertia_"):
            axis = {"inertia_xx": 0, "inertia_yy": 1, "inertia_zz": 2}[key]
            inertia[axis] = float(val)
        else:
            kwargs[key] = float(val)
    kwargs["inertia"] = tuple(inertia)
    return ModelParams(**kwargs)


def make_state(r, q, v, w) -> np.ndarray:
    """Pack the four state blocks into a locked 13-vector.

    The quaternion must already be unit norm (1e-9); callers wanting
    renormalization should do it explicitly.
    """
    x = np.concatenate([
        np.asarray(r, dtype=float).reshape(3),
        np.asarray(q, dtype=float).reshape(4),
        np.asarray(v, dtype=float).reshape(3),
        np.asarray(w, dtype=float).reshape(3),
    ])
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite state component")
    if abs(np.linalg.norm(x[QUAT]) - 1.0) > 1e-9:
        raise ValueError("quaternion is not unit norm")
    x.flags.writeable = False
    return x


def skew(v) -> np.ndarray:
    v = np.asarray(v)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def quat_left(q) -> np.ndarray:
    """Left-multiplication matrix L(q) so that L(q1) q2 = q1 * q2."""
    s, v = q[0], np.asarray(q[1:4])
    out = np.empty((4, 4))
    out[0, 0] = s
    out[0, 1:] = -v
    out[1:, 0] = v
    out[1:, 1:] = s * np.eye(3) + skew(v)
    return out


def quat_to_rotmat(q) -> np.ndarray:
    """Body-to-world rotation matrix. Renormalizes q internally."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_kinematics(q, w) -> np.ndarray:
    """Quaternion rate 0.5 L(q) H w for body angular rate w."""
    return 0.5 * quat_left(q) @ (QUAT_H @ np.asarray(w, dtype=float))


@lru_cache(maxsize=8)
def _derived(p: ModelParams):
    J = np.diag(p.inertia)
    Jinv = np.diag([1.0 / i for i in p.inertia])
    lk = p.arm_length * p.thrust_coeff
    km = p.torque_coeff
    mix = np.array([
        [-lk, -lk, lk, lk],
        [-lk, lk, lk, -lk],
        [-km, km, -km, km],
    ])
    for a in (J, Jinv, mix):
        a.flags.writeable = False
    return J, Jinv, mix


def mixing_matrix(p: ModelParams) -> np.ndarray:
    """3x4 map from per-motor commands to body torques (roll, pitch, yaw)."""
    return _derived(p)[2]


def thrust_force_body(u, p: ModelParams) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.array([0.0, 0.0, p.thrust_coeff * u.sum()])


def body_torques(u, p: ModelParams) -> np.ndarray:
    return mixing_matrix(p) @ np.asarray(u, dtype=float)


def friction_force(v, p: ModelParams) -> np.ndarray:
    """Board-plane sliding friction, N. Opposes velocity componentwise in
    x and y; zero in z (the board is horizontal). Normal force approximated
    as m g."""
    v = np.asarray(v, dtype=float)
    c = p.friction_mu * p.mass * p.gravity
    return np.array([
        -c * math.tanh(v[0] / p.v_eps),
        -c * math.tanh(v[1] / p.v_eps),
        0.0,
    ])


def magnet_force(r, p: ModelParams) -> np.ndarray:
    """Magnet pull on the pen, N. Contact-gated mode releases above z_contact."""
    if p.magnet_mode == CONTACT_GATED and r[2] > p.z_contact:
        return np.zeros(3)
    return np.array([0.0, 0.0, -p.magnet_force])


def continuous_dynamics(x, u, p: ModelParams) -> np.ndarray:
    """Time derivative of the 13-state under motor commands u.

    rdot = v
    qdot = 0.5 L(q) H w
    vdot = (0,0,-g) + (R(q) f_thrust_body + f_magnet + f_friction) / m
    wdot = Jinv (-w x (J w) + torques)
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
        raise ValueError("non-finite dynamics input")
    q = x[QUAT]
    v = x[VEL]
    w = x[OMEGA]
    J, Jinv, mix = _derived(p)

    qdot = 0.5 * quat_left(q) @ (QUAT_H @ w)
    f_world = quat_to_rotmat(q) @ thrust_force_body(u, p)
    f_world += magnet_force(x[POS], p)
    f_world += friction_force(v, p)
    vdot = np.array([0.0, 0.0, -p.gravity]) + f_world / p.mass
    wdot = Jinv @ (-np.cross(w, J @ w) + mix @ u)

    out = np.empty(NX)
    out[POS] = v
    out[QUAT] = qdot
    out[VEL] = vdot
    out[OMEGA] = wdot
    return out
