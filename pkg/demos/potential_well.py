"""A contact interaction plus a shallow Gaussian well.

Run: python3 demos/potential_well.py
"""

from planar_contact.two_body_potential import (
    GaussianPotential,
    denominator_sharp,
    e0_bound,
    find_bound_states_sharp,
    potential_grid,
)

mu = 2.0
well = GaussianPotential(amplitudes=(-0.5,), widths=(1.0,))
grid = potential_grid(well, breakpoints=[25, 50, 100, 200, 400])
e0 = e0_bound(well, mu)
print(f"||v|| = {well.sup_norm}, lower bound -e0 = {-e0:.4f}, bare dimer {-mu**2}")

# the bound state is where the renormalized denominator changes sign
for E in (-17.0, -8.0, -5.0, -4.5, -4.4, -3.0, -1.6):
    print(f"  E={E:6.2f}  denominator {denominator_sharp(well, mu, E, grid):+.6f}")

rep = find_bound_states_sharp(well, mu, (-2 * e0, -1.6), grid)
print("bound states:", rep.energies)

# the well pulls the dimer down; with v = 0 it sits back at -mu^2
flat = find_bound_states_sharp(GaussianPotential(), mu, (-2 * e0, -1.6), grid)
print("without the well:", flat.energies)
