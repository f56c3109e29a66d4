"""A soliton travelling through a small Gaussian bump.

The soliton keeps its speed while the bump disperses into a left-moving tail.
Prints conserved-quantity drift and the soliton position over time.
"""

import numpy as np

from mkdv_lab.evolve import EvolveConfig, run
from mkdv_lab.grid import Grid, PhysicalField
from mkdv_lab.soliton import q_profile

c = 1.0
g = Grid(2048, 400.0, x_min=-300.0)
u0 = PhysicalField(g, q_profile(c, g.x + 20.0) + 0.05 * np.exp(-(g.x**2) / 2))
states = run(u0, EvolveConfig(dt=2e-3, t_end=40.0, snapshot_times=np.linspace(0, 40, 9)))

print(f"{'t':>6} {'peak x':>9} {'expected':>9} {'max drift':>10}")
for s in states:
    v = s.u.values
    right = g.x > -40 + 0.8 * c * s.t  # past the bump's tail
    peak = g.x[right][np.argmax(v[right])]
    print(f"{s.t:6.1f} {peak:9.3f} {-20 + c * s.t:9.3f} {max(s.drift):10.2e}")
