"""Closed-loop tracking: the receding-horizon loop against the nonlinear
plant, error bookkeeping and the full-state CSV export."""

import math

import numpy as np
import pytest

from dronedraw.discretize import hover_equilibrium, linearize_hover, rk4_step
from dronedraw.model import ModelParams
from dronedraw.mpc import (
    FULLSTATE_HEADER,
    SimulationError,
    export_fullstate_csv,
    load_fullstate_csv,
    metrics_summary,
    run_simulation,
    tracking_errors,
)
from dronedraw.qp import MpcConfig
from dronedraw.trajgen import (
    ReferenceTrajectory,
    figure8,
    lift_to_reference,
    velocity_profile_finite_diff,
)

DT = 0.01


def default_setup(horizon=20, **overrides):
    p = ModelParams(**overrides) if overrides else ModelParams()
    lm = linearize_hover(DT, p)
    cfg = MpcConfig(horizon=horizon)
    return p, lm, cfg


def hold_reference(p, n, horizon):
    xbar, _ = hover_equilibrium(p)
    states = np.tile(xbar, (n + horizon, 1))
    return ReferenceTrajectory(states=states, dt=DT)


def fig8_reference(n=260, horizon=20):
    path = velocity_profile_finite_diff(figure8(n, 0.05))
    return lift_to_reference(path, horizon)


# ------------------------------------------------------------ hover hold

def test_hold_at_hover_stays_put():
    p, lm, cfg = default_setup()
    ref = hold_reference(p, 120, cfg.horizon)
    res = run_simulation(ref, lm, cfg, p)
    assert np.abs(res.states - ref.states[0]).max() < 1e-6
    assert np.abs(res.controls - lm.ubar).max() < 1e-4


# --------------------------------------------------------- loop plumbing

def test_history_shapes_and_replay():
    p, lm, cfg = default_setup()
    ref = fig8_reference(n=200, horizon=cfg.horizon)
    res = run_simulation(ref, lm, cfg, p)
    T = len(ref.states) - cfg.horizon
    assert res.states.shape == (T, 13)
    assert res.controls.shape == (T - 1, 4)
    assert res.iterations.shape == (T - 1,)
    assert np.array_equal(res.states[0], ref.states[0])
    # the recorded history replays exactly through the plant model
    for k in (0, 57, T - 2):
        assert np.array_equal(res.states[k + 1],
                              rk4_step(res.states[k], res.controls[k], DT, p))
    assert res.dt == DT
    assert res.wall_time > 0.0


def test_recorded_quaternions_stay_unit():
    p, lm, cfg = default_setup()
    res = run_simulation(fig8_reference(), lm, cfg, p)
    qn = np.linalg.norm(res.states[:, 3:7], axis=1)
    assert np.abs(qn - 1.0).max() < 1e-9


def test_controls_respect_motor_box():
    p, lm, cfg = default_setup()
    res = run_simulation(fig8_reference(), lm, cfg, p)
    assert res.controls.min() >= cfg.u_min
    assert res.controls.max() <= 2.0 * lm.ubar[0] + 1e-12


def test_simulation_is_deterministic():
    p, lm, cfg = default_setup()
    ref = fig8_reference(n=120, horizon=cfg.horizon)
    a = run_simulation(ref, lm, cfg, p)
    b = run_simulation(ref, lm, cfg, p)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.controls, b.controls)


def test_custom_start_state_is_used():
    p, lm, cfg = default_setup()
    ref = hold_reference(p, 80, cfg.horizon)
    x0 = np.array(ref.states[0])
    x0[0] += 0.02
    res = run_simulation(ref, lm, cfg, p, x0=x0)
    assert np.array_equal(res.states[0], x0)
    # the offset decays instead of persisting
    assert abs(res.states[-1, 0]) < 0.002


def test_reference_shorter_than_horizon_rejected():
    p, lm, cfg = default_setup(horizon=50)
    ref = hold_reference(p, 10, 0)
    with pytest.raises(ValueError, match="shorter than one horizon"):
        run_simulation(ref, lm, cfg, p)
    with pytest.raises(ValueError, match="x0"):
        run_simulation(hold_reference(p, 80, 50), lm, cfg, p, x0=np.zeros(4))


def test_solver_failure_carries_step_index():
    p, lm, _ = default_setup()
    cfg = MpcConfig(horizon=20, solver_tol=1e-300, solver_max_iter=1)
    with pytest.raises(SimulationError, match="step 0: QP solver failed"):
        run_simulation(fig8_reference(n=60, horizon=20), lm, cfg, p)


# ------------------------------------------------------- magnet loading

def test_magnet_shifts_mean_motor_command_by_its_share():
    # a held pen-down hover demands f_mag / (4 k_t) extra per motor
    p_on, lm_on, cfg = default_setup()
    p_off, lm_off, _ = default_setup(magnet_force=0.0)
    mean_on = run_simulation(hold_reference(p_on, 150, cfg.horizon),
                             lm_on, cfg, p_on).controls.mean()
    mean_off = run_simulation(hold_reference(p_off, 150, cfg.horizon),
                              lm_off, cfg, p_off).controls.mean()
    expect = 2.0 / (4.0 * 0.147)
    assert mean_on - mean_off == pytest.approx(expect, rel=1e-2)


# ------------------------------------------------------ error accounting

def test_tracking_errors_zero_on_identical_history():
    p, _, cfg = default_setup()
    ref = hold_reference(p, 50, cfg.horizon)
    errs = tracking_errors(ref, ref.states[:50])
    assert np.all(errs.mean_abs == 0.0)
    assert errs.max_norm == 0.0


def test_tracking_errors_constant_offset():
    p, _, cfg = default_setup()
    ref = hold_reference(p, 64, cfg.horizon)
    hist = np.array(ref.states[:64])
    hist[:, 0] += 0.01
    errs = tracking_errors(ref, hist)
    assert errs.mean_abs[0] == pytest.approx(0.01, abs=1e-15)
    assert errs.mean_abs[1] == 0.0
    assert errs.max_norm == pytest.approx(0.01, abs=1e-15)


def test_tracking_errors_sinusoid_mean():
    p, _, cfg = default_setup()
    ref = hold_reference(p, 4000, cfg.horizon)
    hist = np.array(ref.states[:4000])
    amp = 0.003
    hist[:, 1] += amp * np.sin(np.linspace(0, 20 * math.pi, 4000,
                                           endpoint=False))
    errs = tracking_errors(ref, hist)
    assert errs.mean_abs[1] == pytest.approx(2 * amp / math.pi, rel=1e-2)


def test_tracking_errors_rejects_overlong_history():
    p, _, cfg = default_setup()
    ref = hold_reference(p, 10, 0)
    with pytest.raises(ValueError, match="longer than reference"):
        tracking_errors(ref, np.zeros((11, 13)))


def test_metrics_summary_is_json_ready():
    p, lm, cfg = default_setup()
    res = run_simulation(fig8_reference(n=120, horizon=cfg.horizon),
                         lm, cfg, p)
    m = metrics_summary(res)
    assert set(m) == {"mean_abs_error_m", "max_error_m", "steps",
                      "solver_iters_total"}
    assert set(m["mean_abs_error_m"]) == {"x", "y", "z"}
    assert m["steps"] == len(res.controls)
    assert m["solver_iters_total"] == int(res.iterations.sum())
    assert m["max_error_m"] >= m["mean_abs_error_m"]["x"]


# ------------------------------------------------------------ CSV export

def test_fullstate_export_round_trip(tmp_path):
    p, lm, cfg = default_setup()
    res = run_simulation(fig8_reference(n=80, horizon=cfg.horizon),
                         lm, cfg, p)
    f = tmp_path / "run.csv"
    export_fullstate_csv(res, f)
    header = f.read_text().splitlines()[0]
    assert header == ",".join(FULLSTATE_HEADER)

    times, states, acc = load_fullstate_csv(f)
    assert len(times) == len(res.states)
    assert times[1] - times[0] == pytest.approx(DT, abs=1e-12)
    # reloaded values equal the originals bit-exactly at the printed precision
    printed = np.vectorize(lambda v: float(format(v, ".9g")))(res.states)
    assert np.array_equal(states, printed)
    # accelerations are the forward differences of the stored velocities
    expect = np.diff(res.states[:, 7:10], axis=0) / DT
    assert np.allclose(acc[:-1], expect, rtol=1e-6, atol=1e-9)
    assert np.array_equal(acc[-1], acc[-2])


def test_fullstate_export_hover_acceleration_is_zero(tmp_path):
    p, lm, cfg = default_setup()
    res = run_simulation(hold_reference(p, 60, cfg.horizon), lm, cfg, p)
    f = tmp_path / "hover.csv"
    export_fullstate_csv(res, f)
    _, _, acc = load_fullstate_csv(f)
    assert np.abs(acc).max() < 1e-9


def test_load_fullstate_rejects_malformed_files(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("nope\n")
    with pytest.raises(ValueError, match="header"):
        load_fullstate_csv(f)
    cols = ",".join(FULLSTATE_HEADER)
    f.write_text(cols + "\n" + "0," * 16 + "x\n")
    with pytest.raises(ValueError, match=":2:"):
        load_fullstate_csv(f)
    f.write_text(cols + "\n")
    with pytest.raises(ValueError, match="no data"):
        load_fullstate_csv(f)
