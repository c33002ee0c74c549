"""Two particles with a renormalized contact interaction.

Run: python3 demos/two_body.py
"""

import numpy as np

from planar_contact import CutoffModel
from planar_contact.two_body import (
    aghh_alpha_from_mu,
    aghh_mu_from_alpha,
    bound_state,
    convergence_report,
    cutoff_bound_state_energy,
    default_grid,
)

mu = 1.0
grid = default_grid([100.0])

# the limit operator binds exactly at -mu^2
E, vec = bound_state(mu, grid)
print(f"dimer energy {E}  (norm of eigenvector {vec.norm():.12f})")

# every finite cutoff keeps the same dimer: the coupling is tuned for that
for lam in (1.0, 10.0, 1e3, 1e6):
    print(f"  lam={lam:>9g}  cutoff dimer {cutoff_bound_state_energy(CutoffModel(lam, mu)):.15f}")

# the boundary-condition parameter that goes with mu
print(f"alpha(mu=1) = {aghh_alpha_from_mu(1.0):.7f}; mu(alpha=0) = {aghh_mu_from_alpha(0.0):.6f}")

# resolvents converge like 1/lambda on smooth probes
rep = convergence_report(mu, [-2.0, -5.0], [25, 50, 100, 200, 400])
for E in (-2.0, -5.0):
    print(f"E={E}: error table (rows lambda, columns probes)")
    print(np.array2string(rep.errors[E], precision=3))
    print("  fitted slopes", np.round(rep.rates[E], 4))
