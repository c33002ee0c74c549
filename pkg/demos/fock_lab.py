"""Small momentum lattices: the operator identities of the angel construction.

Run: python3 demos/fock_lab.py
"""

import math

import numpy as np

from planar_contact import CutoffModel
from planar_contact.fock import (
    FockGrid,
    discrete_dimer_energy,
    ground_state_energy,
    log_energy_bound,
    phi_one_particle_block,
    run_fuzz_suite,
    verify_block_resolvent_identities,
    verify_phi_bounds,
    verify_square_root_identity,
)
from planar_contact.stm_three_body import build_stm_operator, default_schedule, negative_count

grid = FockGrid.lattice((3, 3), 0.8, n_max=4)
model = CutoffModel(3.0, 0.7)
print(f"{grid.M} modes, sector dims {[grid.dim(n) for n in range(5)]}")
print(f"-g B*B - H_I: {verify_square_root_identity(grid, model):.1e}")

E = min(ground_state_energy(grid, model, n) for n in range(2, 5)) - 1.0
for rep in verify_block_resolvent_identities(grid, model, E):
    print(f"  N={rep.N}  resolvent {rep.resolvent_residual:.1e}  Phi^-1 {rep.phi_inverse_residual:.1e}"
          f"  block {rep.block_inverse_residual:.1e}")

# twenty random instances, reproducible from the seed
print("fuzz suite passed:", run_fuzz_suite(20, seed=0).passed)

# far below -e_3 the operator Phi is positive; E only exists in log space
small = FockGrid.lattice((3, 3), 1.0, n_max=3)
t = math.log(1.1) + log_energy_bound(0.01, 3)
for lam in (10.0, 1e10, 1e30):
    rep = verify_phi_bounds(small, CutoffModel(lam, 0.01), N=3, log_minus_E=t, samples=20, rng=0)
    print(f"  lam={lam:g}: lowest eigenvalue of Phi {rep.min_eigenvalue:.3f}")

# a finer lattice: the two-body zero and the three-body sign structure
lattice = FockGrid.lattice((31, 31), 0.4, n_max=1)
cut = CutoffModel(5.0, 1.0)
print(f"lattice dimer {discrete_dimer_energy(lattice, cut):.4f}")
reduced = default_schedule(1.0, sizes=(400,))[0]
for E in (-60.0, -5.0, -2.0, -1.1):
    ev = np.linalg.eigvalsh(phi_one_particle_block(lattice, cut, E))
    print(f"  E={E:6.1f}  negative eigenvalues: lattice {int(np.sum(ev < 0))},"
          f" reduced {negative_count(build_stm_operator(1.0, E, reduced))}")
