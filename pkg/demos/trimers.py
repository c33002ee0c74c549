"""Three bosons: the two trimers below the dimer threshold.

Run: python3 demos/trimers.py   (about ten seconds)
"""

import numpy as np

from planar_contact.stm_three_body import (
    build_stm_operator,
    default_schedule,
    find_trimer_energies,
    scaled_operator_w,
    smallest_eigenvalue,
)

mu = 1.0
fine = default_schedule(mu)[-1]

# smallest eigenvalue of the reduced Phi(E) rises as E goes down
for E in (-1.05, -1.27, -1.3, -5.0, -16.0, -17.0, -100.0):
    print(f"  E={E:8.2f}  lowest eigenvalue {smallest_eigenvalue(build_stm_operator(mu, E, fine)):+.6f}")

res = find_trimer_energies(mu)
print("trimer energies", res.energies)
print("E3/E2 ratios   ", np.round(res.ratios, 7))
print("grid drift     ", res.drift)

# same energies without any root finding: scale out E and diagonalize once
W = scaled_operator_w(fine)
print("from W         ", W.energies(mu))
