"""One test per acceptance criterion; each prints a single PASS/FAIL line.

The lines are also gathered into the ``acceptance criteria`` section of the
pytest terminal summary.
"""

import math

import numpy as np
import pytest

from planar_contact.fock import (
    FockGrid,
    build_potential_term,
    interaction_form_ratio,
    log_energy_bound,
    run_fuzz_suite,
    verify_phi_bounds,
)
from planar_contact.kernels import CutoffModel, GridFunction, build_radial_grid, schur_bilinear_bound_check, xi_lambda
from planar_contact.stm_three_body import find_trimer_energies, scaled_operator_w
from planar_contact.two_body import (
    bound_state,
    convergence_report,
    cutoff_bound_state_energy,
    cutoff_hamiltonian_matrix,
    cutoff_resolvent,
    default_grid,
)
from planar_contact.two_body_potential import (
    GaussianPotential,
    denominator_terms,
    e0_bound,
    find_bound_states_sharp,
    potential_grid,
)

from . import conftest
from .oracles import TRIMER_RATIOS

LITERATURE_RATIOS = (16.52, 1.270)


def report(k, ok, detail):
    line = f"[criterion {k}] {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


def random_potential(rng):
    k = int(rng.integers(1, 4))
    return GaussianPotential(amplitudes=tuple(rng.uniform(-1.0, 1.0, k)), widths=tuple(rng.uniform(0.6, 2.0, k)))


@pytest.fixture(scope="module")
def trimers():
    return find_trimer_energies(1.0)


def test_criterion_1_dimer_exactness():
    grid = default_grid([100.0])
    worst_exact = worst_cutoff = worst_dense = 0.0
    for mu in (0.5, 1.0, 3.0):
        E, vec = bound_state(mu, grid)
        worst_exact = max(worst_exact, abs(E + mu**2))
        # the eigenvector is annihilated by H - E: its denominator xi(mu^2, mu^2) vanishes identically
        for lam in (1.0, 7.0, 100.0, 1e4, 1e8):
            model = CutoffModel(lam, mu)
            assert xi_lambda(mu**2, mu**2, lam) == 0.0
            worst_cutoff = max(worst_cutoff, abs(cutoff_bound_state_energy(model) + mu**2))
        dense_grid = default_grid([30.0 * mu], panels=30, order=10)
        ground = np.linalg.eigvalsh(cutoff_hamiltonian_matrix(CutoffModel(30.0 * mu, mu), dense_grid))[0]
        worst_dense = max(worst_dense, abs(ground + mu**2) / mu**2)
    ok = worst_exact <= 1e-10 and worst_cutoff <= 1e-10 * 9 and worst_dense <= 1e-8
    report(1, ok, f"|E+mu^2| exact {worst_exact:.1e}, cutoff family {worst_cutoff:.1e}, dense cutoff matrix {worst_dense:.1e} (rel)")


def test_criterion_2_strong_resolvent_convergence():
    rep = convergence_report(1.0, [-2.0, -5.0], [25, 50, 100, 200, 400])
    slopes = [s for E in (-2.0, -5.0) for s in rep.rates[E]]
    ok = len(slopes) == 6 and all(abs(s + 1.0) <= 0.2 for s in slopes)
    report(2, ok, "fitted slopes " + ", ".join(f"{s:.4f}" for s in slopes) + " (target -1 +/- 0.2)")


def test_criterion_3_rank_one_matches_dense_inverse():
    # 39 log panels plus the cutoff as an extra edge: 40 panels of 10 nodes
    grid = build_radial_grid(1e-8, 1e6, 39, 10, breakpoints=[100.0])
    assert len(grid) == 400
    model = CutoffModel(100.0, 1.0)
    q = grid.nodes
    probes = [GridFunction(grid, np.exp(-0.5 * (q / s) ** 2)) for s in (0.3, 1.0, 3.0, 10.0, 40.0)]
    s = grid.sqrt_planar_weights
    worst = 0.0
    for E in (-2.0, -5.0):
        dense = np.linalg.inv(cutoff_hamiltonian_matrix(model, grid) - E * np.eye(len(grid)))
        op = cutoff_resolvent(model, E, grid)
        for p in probes:
            ref = dense @ (s * p.values) / s
            worst = max(worst, float(np.max(np.abs(op.apply(p).values - ref))))
    report(3, worst <= 1e-8, f"{len(grid)}-node grid, 5 probes x 2 energies: max |SM - dense| = {worst:.2e} (tol 1e-8)")


def test_criterion_4_fock_identity_suite():
    rep = run_fuzz_suite(20, seed=0, max_modes=9, max_particles=4)
    sq = max(i["sqrt_identity_residual"] for i in rep.instances)
    r1 = max(i["resolvent_residual"] for i in rep.instances)
    r2 = max(i["phi_inverse_residual"] for i in rep.instances)
    r3 = max(i["block_inverse_residual"] for i in rep.instances)
    ok = rep.passed and len(rep.instances) == 20 and sq <= 1e-10 and max(r1, r2, r3) <= 1e-8
    report(4, ok, f"20 instances: sqrt identity {sq:.1e}, resolvent {r1:.1e}, Phi inverse {r2:.1e}, block inverse {r3:.1e}")


def test_criterion_5_bound_suite():
    rng = np.random.default_rng(2024)
    grid = build_radial_grid(1e-6, 1e3, 12, 6)
    schur_violations = 0
    for _ in range(200):
        h = rng.standard_normal(len(grid)) * np.exp(-rng.uniform(0, 2) * np.log(grid.nodes) ** 2)
        hp = rng.standard_normal(len(grid))
        lhs, rhs = schur_bilinear_bound_check(grid, h, hp, float(10 ** rng.uniform(-3, 3)))
        schur_violations += lhs > rhs

    fock = FockGrid.lattice((3, 3), 0.8, n_max=4, weights=0.64 * rng.uniform(0.7, 1.3, 9))
    model = CutoffModel(3.0, 0.7)
    form = {N: interaction_form_ratio(fock, model, -2.0, N, samples=100, rng=rng) for N in (3, 4)}
    form_ok = all(form[N] <= 2 * N * N for N in form)

    small = FockGrid.lattice((3, 2), 0.9, n_max=4)
    worst_v = 0.0
    for _ in range(20):
        pot = random_potential(rng)
        V = build_potential_term(small, pot)
        for N in (2, 3, 4):
            norm = np.max(np.abs(np.linalg.eigvalsh(V[N])))
            worst_v = max(worst_v, norm / (N * N * pot.sup_norm / 2))
    ok = schur_violations == 0 and form_ok and worst_v <= 1.0
    report(5, ok, f"Schur violations {schur_violations}/200; |<Phi_I>|/||Psi||^2 = {form[3]:.3g} (N=3, bound 18), "
                  f"{form[4]:.3g} (N=4, bound 32); max ||V'||/(N^2||v||/2) = {worst_v:.3f} over 20 potentials")


def test_criterion_6_phi_positivity():
    grid = FockGrid.lattice((3, 3), 1.0, n_max=3)
    log_e3 = log_energy_bound(0.01, 3)
    log_minus_E = math.log(1.1) + log_e3
    lams = (10.0, 1e3, 1e10, 1e30)
    mins = []
    for lam in lams:
        rep = verify_phi_bounds(grid, CutoffModel(lam, 0.01), N=3, log_minus_E=log_minus_E, samples=20, rng=0)
        mins.append(rep.min_eigenvalue)
    detail = ", ".join(f"lam={lam:g}: {m:.4g}" for lam, m in zip(lams, mins))
    report(6, mins[-1] > 0, f"log(-E) = {log_minus_E:.3f}; min eig of Phi on H~_1: {detail}")


def test_criterion_7_trimers(trimers):
    doubled = find_trimer_energies(2.0)
    two = len(trimers.energies) == 2
    drift = max(trimers.drift) if trimers.drift else math.inf
    scaling = max(abs(b / a / 4.0 - 1.0) for a, b in zip(trimers.energies, doubled.energies)) if two else math.inf
    ratios = trimers.ratios
    oracle_gap = max(abs(r / o - 1.0) for r, o in zip(ratios, TRIMER_RATIOS)) if two else math.inf
    lit_gap = max(abs(r / o - 1.0) for r, o in zip(ratios, LITERATURE_RATIOS)) if two else math.inf
    ok = two and drift < 1e-3 and scaling <= 1e-6 and oracle_gap <= 0.01
    report(7, ok, f"{len(trimers.energies)} eigenvalue zero crossings at E = {[round(e, 7) for e in trimers.energies]}; drift {drift:.1e}; "
                  f"scaling dev {scaling:.1e}; ratios {[round(r, 6) for r in ratios]} vs oracle {TRIMER_RATIOS} "
                  f"(gap {oracle_gap:.1e}; literature gap {lit_gap:.1e})")


def test_criterion_8_w_operator(trimers):
    W = scaled_operator_w(build_radial_grid(1e-4, 1e7, 100, 8))
    energies = [float(e) for e in W.energies(1.0)]
    gap = max(abs(a / b - 1.0) for a, b in zip(energies, trimers.energies)) if len(energies) == len(trimers.energies) else math.inf
    report(8, gap <= 1e-6, f"W eigenvalues {np.round(W.negative_eigenvalues, 9).tolist()} give E = "
                           f"{[round(e, 7) for e in energies]}; max rel gap {gap:.1e}")


def test_criterion_9_potential_extension():
    zero = GaussianPotential()
    well = GaussianPotential(amplitudes=(-0.5,), widths=(1.0,))
    g = potential_grid(well, breakpoints=[25, 50, 100, 200, 400])
    dimer_gap = 0.0
    for mu in (0.5, 1.0, 3.0):
        roots = find_bound_states_sharp(zero, mu, (-20.0 * mu**2, -0.1 * mu**2), g).energies
        dimer_gap = max(dimer_gap, abs(roots[0] + mu**2) if len(roots) == 1 else math.inf)

    mu = 2.0
    e0 = e0_bound(well, mu)
    roots = find_bound_states_sharp(well, mu, (-2.0 * e0, -well.sup_norm - 1.0 - 1e-9), g).energies
    well_ok = len(roots) == 1 and -e0 <= roots[0] < -(mu**2)

    rng = np.random.default_rng(99)
    worst_first = worst_second = 0.0
    for _ in range(20):
        pot = random_potential(rng)
        grid = potential_grid(pot)
        E = -pot.sup_norm - 1.0 - rng.uniform(0.01, 5.0)
        first, second = denominator_terms(pot, E, grid)
        worst_first = max(worst_first, abs(first) / math.pi)
        worst_second = max(worst_second, abs(second) / (math.pi * pot.sup_norm))
    ok = dimer_gap <= 1e-10 and well_ok and worst_first <= 1.0 and worst_second <= 1.0
    report(9, ok, f"v=0 dimer gap {dimer_gap:.1e}; well root {roots} in [{-e0:.4f}, {-mu**2}); "
                  f"max |(O,v'O)|/pi = {worst_first:.3f}, max |(O,v'R1v'O)|/(pi||v||) = {worst_second:.3f} over 20 potentials")
