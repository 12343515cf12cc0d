"""Condensed box-constrained QP formulation of the tracking MPC, plus the
active-set solver used to run it.

The horizon-N tracking problem in deviation coordinates is

    min_U  0.5 sum_k (dx_k - dxdes_k)' Q_k (dx_k - dxdes_k) + 0.5 U' Rbar U
    s.t.   dx_{k+1} = A dx_k + B du_k,   lo <= U <= hi

with Q_k = Q for stages 1..N-1 and Qf at stage N. Eliminating the states
with dX = Phi dx_ic + Gamma U leaves a dense box QP in the N*4 motor
deviations, whose Hessian is constant: it only depends on (A, B, Q, R, Qf),
so one Cholesky factorization serves every step of a flight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .discretize import LinearModel
from .model import NU, NX


@dataclass(frozen=True)
class MpcConfig:
    """Tracking weights and bounds. Weights follow the inverse-square rule:
    a state component allowed to deviate by d contributes 1/d^2 to Q."""

    horizon: int = 20
    max_dev_pos: float = 0.01      # m
    max_dev_quat: float = 1.0
    max_dev_vel: float = 0.5       # m/s
    max_dev_rate: float = 5.0      # rad/s
    max_dev_u: float = 0.5         # motor command units
    qf_scale: float = 10.0         # terminal weight multiplier
    u_min: float = 0.0             # absolute motor command floor
    u_max: float | None = None     # absolute ceiling; None means 2 * ubar
    solver_tol: float = 1e-6
    solver_max_iter: int = 5000

    def state_weights(self) -> np.ndarray:
        dev = np.concatenate([
            np.full(3, self.max_dev_pos),
            np.full(4, self.max_dev_quat),
            np.full(3, self.max_dev_vel),
            np.full(3, self.max_dev_rate),
        ])
        return 1.0 / dev**2

    def Q(self) -> np.ndarray:
        return np.diag(self.state_weights())

    def R(self) -> np.ndarray:
        return np.diag(np.full(NU, 1.0 / self.max_dev_u**2))

    def Qf(self) -> np.ndarray:
        return self.qf_scale * self.Q()


@dataclass(frozen=True)
class QpProblem:
    """A concrete box QP instance: min 0.5 x'Hx + g'x s.t. lo <= x <= hi."""

    H: np.ndarray
    g: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        n = len(self.g)
        if self.H.shape != (n, n):
            raise ValueError("H shape does not match g")
        if len(self.lo) != n or len(self.hi) != n:
            raise ValueError("bound length does not match g")
        if np.any(self.lo > self.hi):
            raise ValueError("lo exceeds hi")

    def objective(self, x) -> float:
        return float(0.5 * x @ (self.H @ x) + self.g @ x)


def condense(A, B, Q, R, Qf, horizon: int):
    """Eliminate states from the horizon problem.

    Returns (Phi, Gamma, H, Qbar) with dX = Phi dx_ic + Gamma U stacking
    stages 1..N, H = Gamma' Qbar Gamma + Rbar the constant Hessian, and
    Qbar the stacked stage-weight matrix (Q repeated, Qf last).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n, m = B.shape
    N = int(horizon)
    if N < 1:
        raise ValueError("horizon must be at least 1")

    powers = [np.eye(n)]
    for _ in range(N):
        powers.append(A @ powers[-1])

    Phi = np.vstack(powers[1:])
    Gamma = np.zeros((N * n, N * m))
    for k in range(1, N + 1):          # block row: state at stage k
        for j in range(k):             # block col: input at stage j
            Gamma[(k - 1) * n:k * n, j * m:(j + 1) * m] = powers[k - 1 - j] @ B

    Qbar = np.zeros((N * n, N * n))
    for k in range(N - 1):
        Qbar[k * n:(k + 1) * n, k * n:(k + 1) * n] = Q
    Qbar[(N - 1) * n:, (N - 1) * n:] = Qf

    Rbar = np.kron(np.eye(N), R)
    H = Gamma.T @ Qbar @ Gamma + Rbar
    H = 0.5 * (H + H.T)
    return Phi, Gamma, H, Qbar


class SolverError(RuntimeError):
    """Raised when the QP solver cannot reach the requested residual. Carries
    the best iterate so callers can inspect how close it got."""

    def __init__(self, message, x, iterations, residual):
        super().__init__(message)
        self.x = x
        self.iterations = iterations
        self.residual = residual


def _power_lmax(H, iters=80, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(H.shape[0])
    v /= np.linalg.norm(v)
    lam = 1.0
    for _ in range(iters):
        w = H @ v
        lam = np.linalg.norm(w)
        if lam == 0.0:
            return 1.0
        v = w / lam
    return lam


def kkt_residual(H, g, lo, hi, x) -> float:
    """Infinity norm of x - clip(x - (Hx + g)); zero exactly at the optimum."""
    return float(np.abs(x - np.clip(x - (H @ x + g), lo, hi)).max())


def solve_box_qp(H, g, lo, hi, x0=None, tol=1e-6, max_iter=5000, chol=None):
    """Projected-Newton active-set solve of min 0.5 x'Hx + g'x on a box.

    Components pressed against a bound with the gradient pushing outward are
    frozen; the rest take a Newton step, backtracked along the projection
    arc until an Armijo decrease holds. When no bound is active the Newton
    system is the full H, so callers solving many QPs with one H can pass
    chol (a scipy cho_factor of H) to skip refactorizing.

    Returns (x, iterations, residual). Raises SolverError if the residual
    has not reached tol within max_iter iterations or the iterate stalls at
    the floating-point floor first.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = len(g)
    x = np.clip(np.zeros(n) if x0 is None else np.asarray(x0, dtype=float),
                lo, hi)
    f = 0.5 * x @ (H @ x) + g @ x
    lip = None

    for k in range(max_iter):
        grad = H @ x + g
        res = np.abs(x - np.clip(x - grad, lo, hi)).max()
        if res <= tol:
            return x, k, float(res)

        eps = min(1e-2, res)
        binding = (((x <= lo + eps) & (grad > 0))
                   | ((x >= hi - eps) & (grad < 0)))
        free = ~binding
        d = np.zeros(n)
        d[binding] = -grad[binding]
        if free.any():
            try:
                if free.all() and chol is not None:
                    d = -sla.cho_solve(chol, grad)
                else:
                    d[free] = -np.linalg.solve(H[np.ix_(free, free)],
                                               grad[free])
            except np.linalg.LinAlgError:
                if lip is None:
                    lip = _power_lmax(H) * 1.01
                d[free] = -grad[free] / lip

        alpha = 1.0
        accepted = False
        for _ in range(60):
            xn = np.clip(x + alpha * d, lo, hi)
            fn = 0.5 * xn @ (H @ xn) + g @ xn
            if fn <= f - 1e-4 * (grad @ (x - xn)):
                accepted = True
                break
            alpha *= 0.5
        if not accepted or fn > f:
            raise SolverError(
                f"stalled at residual {res:.3e} (tol {tol:.1e}) after "
                f"{k} iterations", x, k, float(res))
        x, f = xn, fn

    res = kkt_residual(H, g, lo, hi, x)
    raise SolverError(
        f"residual {res:.3e} still above tol {tol:.1e} after "
        f"{max_iter} iterations", x, max_iter, float(res))


@dataclass
class QpSolution:
    """Solver output plus the state rollout the condensed solution implies."""

    u: np.ndarray            # stacked input deviations, length N*4
    dx: np.ndarray           # stacked state deviations, stages 1..N
    objective: float
    iterations: int
    residual: float


class MpcController:
    """Receding-horizon tracker around one linearization.

    Everything that does not depend on the current state (Phi, Gamma, the
    Hessian and its Cholesky factor, the bounds) is computed once here;
    step() only builds the gradient, solves, and shifts the warm start.
    """

    def __init__(self, lin: LinearModel, cfg: MpcConfig):
        self.lin = lin
        self.cfg = cfg
        N = cfg.horizon
        Q, R, Qf = cfg.Q(), cfg.R(), cfg.Qf()
        self.Phi, self.Gamma, self.H, self.Qbar = condense(
            lin.A, lin.B, Q, R, Qf, N)
        self._GtQ = self.Gamma.T @ self.Qbar
        u_max = 2.0 * lin.ubar if cfg.u_max is None else np.full(NU, cfg.u_max)
        self.u_lo_abs = np.full(NU, cfg.u_min)
        self.u_hi_abs = np.asarray(u_max, dtype=float)
        self.lo = np.tile(self.u_lo_abs - lin.ubar, N)
        self.hi = np.tile(self.u_hi_abs - lin.ubar, N)
        self._chol = sla.cho_factor(self.H)
        self._u_warm = np.zeros(N * NU)
        self.last: QpSolution | None = None

    def gradient(self, dx_ic, dxdes_stack) -> np.ndarray:
        return self._GtQ @ (self.Phi @ dx_ic - dxdes_stack)

    def problem(self, dx_ic, dxdes_stack) -> QpProblem:
        return QpProblem(H=self.H, g=self.gradient(dx_ic, dxdes_stack),
                         lo=self.lo, hi=self.hi)

    def step(self, x, xdes_window) -> np.ndarray:
        """Absolute motor commands for current state x, tracking the next
        horizon of absolute desired states (shape (N, 13), stages 1..N)."""
        N = self.cfg.horizon
        xdes_window = np.asarray(xdes_window, dtype=float)
        if xdes_window.shape != (N, NX):
            raise ValueError(
                f"desired window must be ({N}, {NX}), got {xdes_window.shape}")
        dx_ic = np.asarray(x, dtype=float) - self.lin.xbar
        dxdes = (xdes_window - self.lin.xbar).reshape(-1)
        g = self._GtQ @ (self.Phi @ dx_ic - dxdes)
        u, iters, res = solve_box_qp(
            self.H, g, self.lo, self.hi, x0=self._u_warm,
            tol=self.cfg.solver_tol, max_iter=self.cfg.solver_max_iter,
            chol=self._chol)
        self._u_warm = np.concatenate([u[NU:], np.zeros(NU)])
        self.last = QpSolution(
            u=u,
            dx=self.Phi @ dx_ic + self.Gamma @ u,
            objective=float(0.5 * u @ (self.H @ u) + g @ u),
            iterations=iters,
            residual=res)
        return np.clip(u[:NU] + self.lin.ubar, self.u_lo_abs, self.u_hi_abs)

    def reset(self):
        self._u_warm = np.zeros(self.cfg.horizon * NU)
        self.last = None


def mpc_step(controller: MpcController, x, xdes_window) -> np.ndarray:
    """One receding-horizon update: solve the condensed QP from state x and
    return the first-stage absolute motor commands."""
    return controller.step(x, xdes_window)


_QP_LABELS = ("H", "G", "LO", "HI")


def save_qp(problem: QpProblem, path) -> None:
    """Write a QP as labeled row-major text blocks (H, G, LO, HI) at 17
    significant digits, the same shape of file the linear model uses."""
    with open(path, "w") as fh:
        for label, arr in zip(_QP_LABELS,
                              (problem.H, problem.g, problem.lo, problem.hi)):
            fh.write(label + "\n")
            for row in np.atleast_2d(arr):
                fh.write(" ".join(format(v, ".17g") for v in row) + "\n")


def load_qp(path) -> QpProblem:
    blocks = {}
    label = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line in _QP_LABELS:
                label = line
                blocks[label] = []
                continue
            if label is None:
                raise ValueError(f"{path}:{lineno}: data before any block label")
            try:
                blocks[label].append([float(tok) for tok in line.split()])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    missing = [k for k in _QP_LABELS if k not in blocks]
    if missing:
        raise ValueError(f"{path}: missing blocks {missing}")
    return QpProblem(
        H=np.array(blocks["H"]),
        g=np.array(blocks["G"]).ravel(),
        lo=np.array(blocks["LO"]).ravel(),
        hi=np.array(blocks["HI"]).ravel(),
    )
