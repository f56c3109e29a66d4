"""Solve the self-similar profile for a given mass and check it against its PDE.

Also shows how the profile mass responds linearly to the Airy amplitude k.
"""

from mkdv_lab import painleve

for mass in (0.05, 0.25, 0.5):
    sol = painleve.solve_painleve(mass)
    print(f"mass {mass:4.2f}: k = {sol.k:.6f}  ODE residual {sol.ode_residual:.1e}  "
          f"self-similar PDE residual {painleve.pde_residual(sol):.1e}")

print(f"d(mass)/dk at k=0: {painleve.profile_mass(1e-6) / 1e-6:.6f}  (Airy mass {painleve.airy_mass():.6f})")
