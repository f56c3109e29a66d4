"""Sup-norm decay of small Gaussian data on a desk-size grid.

A coarse version of the ``decay`` experiment: fit the sup-norm exponent over
t in [10, 80] and compare with -1/3.
"""

import numpy as np

from mkdv_lab.evolve import EvolveConfig, run
from mkdv_lab.fitting import loglog_fit
from mkdv_lab.grid import Grid, PhysicalField
from mkdv_lab.scattering import dispersive_diagnostics

g = Grid(4096, 1200.0, x_min=-1100.0)
u0 = PhysicalField(g, 0.1 * np.exp(-(g.x**2) / 2))
times = np.geomspace(10, 80, 12)
states = run(u0, EvolveConfig(dt=0.01, t_end=80.0, snapshot_times=times, absorb_width=200.0, absorb_strength=50.0))

rows = [dispersive_diagnostics(s.u, s.t) for s in states]
for r in rows:
    print(f"t={r['t']:7.2f}  sup={r['sup']:.4e}  sup*t^(1/3)<.>^(1/4)={r['sup_scaled']:.4f}")
fit = loglog_fit([r["t"] for r in rows], [r["sup"] for r in rows])
print(f"fitted exponent {fit.slope:.4f} (R^2 {fit.r2:.5f}); -1/3 = {-1 / 3:.4f}")
