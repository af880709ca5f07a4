"""
A short tour: closed-form heat and wave kernels against their partial-wave
sums, the geometric/diffractive split, and one dispersive decay fit.

Run with ``python3 demos/kernel_tour.py`` (a few seconds).
"""

import math

import numpy as np

from abwave import heatkernel as hk
from abwave import wavekernel as wk
from abwave.angular import AngularField, exact_modes
from abwave.estimates import dispersive_check, localized_draw


def heat_table(alpha=1 / 3, t=1.0):
    f = AngularField.ab(alpha)
    y = (1.0, 0.0)
    print(f"heat kernel, alpha = {alpha:.4g}, t = {t}, x = (1, dtheta), y = (1, 0)")
    print(f"{'dtheta':>8} {'|G_h|':>12} {'|D_h|':>12} {'|K|':>12} {'rel err':>10}")
    for d in np.linspace(0.0, 2 * math.pi, 9)[:-1] + 0.05:
        x = (1.0, float(d))
        ev = hk.heat_kernel(f, t, x, y)
        ref = hk.heat_mode_sum(f, t, x, y)
        print(f"{d:8.3f} {abs(ev.geometric):12.5e} {abs(ev.diffractive):12.5e} {abs(ev.total):12.5e} "
              f"{abs(ev.total - ref) / abs(ref):10.1e}")


def wave_table(alpha=1 / 3):
    f = AngularField.ab(alpha)
    x, y = (1.0, 1.0), (1.5, 0.0)
    print(f"\nwave kernel, alpha = {alpha:.4g}, x = (1, 1), y = (1.5, 0)")
    print(f"{'t':>6} {'region':>6} {'K':>26} {'oracle':>26}")
    for t in (0.3, 1.0, 2.0, 3.0, 6.0):
        ev = wk.wave_kernel(f, t, x, y)
        if ev.status != "ok":
            print(f"{t:6.2f} {ev.region:>6} {ev.status:>26}")
            continue
        ref, _ = wk.wave_mode_sum(f, t, x, y)
        print(f"{t:6.2f} {ev.region:>6} {ev.total:26.12g} {ref:26.12g}")


def decay_fit(alpha=0.5, seed=1):
    f = AngularField.ab(alpha)
    d = localized_draw(exact_modes(f, -3, 3), seed, 0)
    fit = dispersive_check(f, 0, d)
    print(f"\ndispersive decay, alpha = {alpha}, seed {seed}: exponent {fit.exponent:.3f}, "
          f"normalized sup {fit.sup_ratio:.3f}")
    for t, n in list(zip(fit.t, fit.norms))[::6]:
        print(f"  t = {t:7.2f}   ||u||_inf = {n:.4e}")


if __name__ == "__main__":
    heat_table()
    wave_table()
    decay_fit()
