"""Tour of the vehicle model: hover trim, integration, linearization and
the LQR stability margin. Run with no arguments; prints a short report."""

import numpy as np

from dronedraw import (
    ModelParams,
    MpcConfig,
    continuous_dynamics,
    dlqr_gain,
    hover_equilibrium,
    linearize_hover,
    rk4_step,
    spectral_radius,
)


def main():
    p = ModelParams()
    print("vehicle:", f"mass {p.mass} kg, thrust coeff {p.thrust_coeff},",
          f"magnet pull {p.magnet_force} N ({p.magnet_mode})")

    # trim: level attitude, motors carrying weight plus magnet pull
    xbar, ubar = hover_equilibrium(p)
    print(f"hover command per motor: {ubar[0]:.9g}")
    print(f"|f(xbar, ubar)| = {np.linalg.norm(continuous_dynamics(xbar, ubar, p)):.2e}"
          " (continuous dynamics vanish at trim)")

    # the discrete step has the same fixed point
    drift = np.linalg.norm(rk4_step(xbar, ubar, 0.01, p) - xbar)
    print(f"|rk4(xbar, ubar) - xbar| = {drift:.2e}")

    # without the magnet the motors relax
    p_off = ModelParams(magnet_force=0.0)
    _, ubar_off = hover_equilibrium(p_off)
    print(f"magnet off, hover command drops to {ubar_off[0]:.9g} "
          f"(delta {ubar[0] - ubar_off[0]:.9g} = pull / (4 k_t))")

    # linearize the step map about the trim and close the loop with LQR
    lm = linearize_hover(0.01, p)
    print(f"\nlinearized step: A {lm.A.shape}, B {lm.B.shape}, "
          f"open-loop spectral radius {spectral_radius(lm.A):.6f}")
    cfg = MpcConfig()
    K, _ = dlqr_gain(lm.A, lm.B, cfg.Q(), cfg.R())
    rho = spectral_radius(lm.A - lm.B @ K)
    print(f"LQR closed-loop spectral radius: {rho:.9f} (< 1: stable)")

    # push the closed loop from a 2 cm offset and watch it settle
    x = np.array(xbar)
    x[0] += 0.02
    print("\nregulating a 2 cm x offset:")
    for k in range(120):
        u = np.clip(ubar - K @ (x - xbar), 0.0, 2 * ubar)
        x = rk4_step(x, u, 0.01, p)
        if k % 30 == 29:
            print(f"  t = {0.01 * (k + 1):.1f} s   x = {x[0] * 1e3:7.3f} mm")


if __name__ == "__main__":
    main()
