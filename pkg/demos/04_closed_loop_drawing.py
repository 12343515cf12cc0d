"""A full drawing flight: track a shipped scenario with the receding-horizon
controller against the nonlinear plant, then export the history. Pass a
preset name to try the others (default fig8-1000-N75)."""

import sys
from pathlib import Path

import numpy as np

from dronedraw import (
    ModelParams,
    MpcConfig,
    PRESETS,
    build_reference,
    export_fullstate_csv,
    linearize_hover,
    metrics_summary,
    run_simulation,
)

OUT = Path("demo_out")


def main():
    name = sys.argv[1] if len(sys.argv) > 1 else "fig8-1000-N75"
    preset = PRESETS[name]
    print(f"scenario {name}: {preset.points} points, horizon {preset.horizon},"
          f" {preset.profile} profile")

    p = ModelParams()
    lm = linearize_hover(0.01, p)
    ref = build_reference(preset, dt=0.01, v_cap=0.01)
    res = run_simulation(ref, lm, MpcConfig(horizon=preset.horizon), p)

    err = np.linalg.norm(
        res.states[:, :3] - ref.states[:len(res.states), :3], axis=1)
    print(f"flew {len(res.states)} steps in {res.wall_time:.2f} s wall time")
    print(f"position error: {err[100:].max() * 1e3:.3f} mm worst after the "
          f"first second, {err.mean() * 1e3:.3f} mm mean overall")
    print(f"QP effort: {res.iterations.mean():.2f} iterations/step, "
          f"worst residual {res.residuals.max():.1e}")

    m = metrics_summary(res)
    print("mean |error| per axis:",
          {k: f"{v * 1e3:.3f} mm" for k, v in m["mean_abs_error_m"].items()})

    OUT.mkdir(exist_ok=True)
    out = OUT / f"{name}.fullstate.csv"
    export_fullstate_csv(res, out)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
