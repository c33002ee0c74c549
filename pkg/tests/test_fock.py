import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from planar_contact.exceptions import AtEigenvalueError, DomainError, GridDesignError
from planar_contact.fock import (
    PAIR_NORM,
    FockGrid,
    build_b_lambda,
    build_h_interaction,
    build_ladder,
    build_phi,
    build_potential_term,
    discrete_dimer_energy,
    ground_state_energy,
    interaction_form_ratio,
    log_energy_bound,
    phi_one_particle_block,
    run_fuzz_suite,
    tail_constant,
    verify_block_resolvent_identities,
    verify_number_bounds,
    verify_phi_bounds,
    verify_sharp_identities,
    verify_square_root_identity,
    wick_split,
)
from planar_contact.kernels import CutoffModel, Dispersion
from planar_contact.two_body_potential import GaussianPotential


@pytest.fixture(scope="module")
def grid():
    w = 0.64 * np.random.default_rng(1).uniform(0.7, 1.3, 9)
    return FockGrid.lattice((3, 3), 0.8, n_max=4, weights=w)


@pytest.fixture(scope="module")
def model():
    return CutoffModel(3.0, 0.7)


@pytest.fixture(scope="module")
def below_ground(grid, model):
    return min(ground_state_energy(grid, model, n) for n in range(2, 5)) - 1.0


class TestGrid:
    def test_dimensions(self, grid):
        assert grid.M == 9
        assert [grid.dim(n) for n in range(5)] == [1, 9, 45, 165, 495]
        assert grid.angel_dim(2) == 9 * 45
        assert grid.dim(-1) == 0

    def test_lattice_sum_table_is_periodic(self):
        g = FockGrid.lattice((5, 1), 1.0)
        ints = g.integer_momenta[:, 0]
        for i in range(5):
            for j in range(5):
                assert (ints[g.sum_table[i, j]] - ints[i] - ints[j]) % 5 == 0

    def test_from_momenta_requires_closure(self):
        FockGrid.from_momenta([[0.0, 0.0]])
        with pytest.raises(GridDesignError):
            FockGrid.from_momenta([[0.0, 0.0], [1.0, 0.0]])

    def test_free_grids_have_no_position_lattice(self):
        g = FockGrid.from_momenta([[0.0, 0.0]], n_max=2)
        with pytest.raises(GridDesignError):
            g.positions()
        with pytest.raises(GridDesignError):
            build_potential_term(g, lambda r: 0 * r)

    def test_bad_input(self):
        with pytest.raises(DomainError):
            FockGrid([[0.0, 0.0]], [0.0], [[0]])
        with pytest.raises(DomainError):
            FockGrid([[0.0, 0.0], [0.0, 0.0]], [1.0, 1.0], [[0, 1], [1, 0]])
        with pytest.raises(DomainError):
            FockGrid.lattice((3, 0))

    def test_dispersion_tag(self, grid):
        assert grid.dispersion is Dispersion.MANY_BODY
        np.testing.assert_allclose(grid.omega, 0.5 * np.sum(grid.momenta**2, axis=1))


class TestLadder:
    def test_canonical_commutator(self, grid):
        lad = build_ladder(grid)
        for n in range(1, grid.n_max):
            for i in range(grid.M):
                for j in (i, (i + 4) % grid.M):
                    a_i_up = lad.annihilators[n + 1][i]
                    c_j_up = lad.creators[n + 1][j]
                    comm = (a_i_up @ c_j_up - lad.creators[n][j] @ lad.annihilators[n][i]).toarray()
                    expect = np.eye(grid.dim(n)) / grid.weights[i] if i == j else 0.0
                    np.testing.assert_allclose(comm, expect, atol=1e-12)

    def test_number_operator(self, grid):
        lad = build_ladder(grid)
        for n in range(grid.n_max + 1):
            np.testing.assert_allclose(lad.number[n].toarray(), n * np.eye(grid.dim(n)), atol=1e-12)

    def test_annihilating_one_particle_reaches_vacuum(self, grid):
        for i in range(grid.M):
            a = grid.annihilator(1, i).toarray()
            assert a.shape == (1, grid.M)
            assert a[0, i] == pytest.approx(1 / math.sqrt(grid.weights[i]))

    def test_free_energy_is_sum_of_modes(self, grid):
        states, _ = grid.basis(2)
        s = states[7]
        assert grid.h0(2)[7] == pytest.approx(sum(k * o for k, o in zip(s, grid.omega)))


class TestPairOperator:
    def test_low_sectors_are_empty(self, grid, model):
        B = build_b_lambda(grid, model)
        assert B[0].shape == (0, 1)
        assert B[1].shape == (0, grid.M)
        assert B.shift == -2 and B.target == "angel"

    def test_single_pair_matrix_elements(self, grid, model):
        # hand-computed: B|1_i 1_j> = 2c sqrt(w_i w_j) rho / sqrt(w_P) and B|2_i> = sqrt2 c w_i rho / sqrt(w_P)
        B = build_b_lambda(grid, model)[2]
        states, index = grid.basis(2)
        w, rho = grid.weights, grid.rho(model.lam)
        for i in range(grid.M):
            for j in range(i, grid.M):
                occ = [0] * grid.M
                occ[i] += 1
                occ[j] += 1
                col = B[:, index[tuple(occ)]]
                P = grid.sum_table[i, j]
                if i == j:
                    expect = math.sqrt(2) * PAIR_NORM * w[i] * rho[i, i] / math.sqrt(w[P])
                else:
                    expect = 2 * PAIR_NORM * math.sqrt(w[i] * w[j]) * rho[i, j] / math.sqrt(w[P])
                assert col[P] == pytest.approx(expect, rel=1e-14)
                assert np.count_nonzero(col) == (1 if expect else 0)

    def test_back_to_back_pair_lands_at_zero_angel_momentum(self, grid, model):
        B = build_b_lambda(grid, model)[2]
        states, index = grid.basis(2)
        zero = int(np.argmin(np.linalg.norm(grid.momenta, axis=1)))
        i = 1
        j = int(np.argmin(np.linalg.norm(grid.momenta + grid.momenta[i], axis=1)))
        occ = [0] * grid.M
        occ[i] = occ[j] = 1
        col = B[:, index[tuple(occ)]]
        assert np.flatnonzero(col).tolist() == [zero]

    def test_adjoint_keys(self, grid, model):
        B = build_b_lambda(grid, model)
        Bs = B.adjoint()
        assert Bs.sectors() == [-2, -1, 0, 1, 2]
        np.testing.assert_array_equal(Bs[1], B[3].T)


class TestInteraction:
    def test_low_sectors_vanish(self, grid, model):
        H = build_h_interaction(grid, model)
        assert not np.any(H[0]) and not np.any(H[1])

    def test_symmetric_and_attractive(self, grid, model):
        H = build_h_interaction(grid, model)
        for n in range(2, 5):
            assert np.max(np.abs(H[n] - H[n].T)) <= 1e-12
            assert np.linalg.eigvalsh(H[n])[-1] <= 1e-12

    def test_square_root_identity(self, grid, model):
        assert verify_square_root_identity(grid, model) <= 1e-12

    def test_identity_detects_wrong_coupling(self, grid, model):
        assert verify_square_root_identity(grid, model, g=model.g * 1.01) > 1e-6

    def test_pair_operator_does_not_depend_on_mu(self, grid):
        a = build_b_lambda(grid, CutoffModel(3.0, 0.2))
        b = build_b_lambda(grid, CutoffModel(3.0, 5.0))
        for n in range(5):
            np.testing.assert_array_equal(a[n], b[n])
        assert verify_square_root_identity(grid, CutoffModel(3.0, 5.0)) <= 1e-12

    def test_infinite_cutoff_rejected(self, grid):
        with pytest.raises(DomainError):
            build_h_interaction(grid, CutoffModel(math.inf, 1.0))

    @given(st.integers(0, 2**32 - 1), st.floats(0.5, 10.0), st.floats(0.05, 3.0))
    def test_identity_on_random_weights(self, seed, lam, mu):
        r = np.random.default_rng(seed)
        g = FockGrid.lattice((5, 1), r.uniform(0.3, 1.5), n_max=3, weights=r.uniform(0.2, 2.0, 5))
        assert verify_square_root_identity(g, CutoffModel(lam, mu)) <= 1e-10


class TestPhi:
    def test_symmetric(self, grid, model, below_ground):
        phi = build_phi(grid, model, below_ground)
        assert phi.sectors() == [0, 1, 2]
        for m in phi.sectors():
            assert phi[m].shape == (grid.angel_dim(m),) * 2
            assert np.array_equal(phi[m], phi[m].T)

    def test_wick_split_reassembles(self, grid, model, below_ground):
        phi = build_phi(grid, model, below_ground)
        p0, p2, p4 = wick_split(grid, model, below_ground)
        for m in phi.sectors():
            assert np.max(np.abs(phi[m] - p0[m] - p2[m] - p4[m])) <= 1e-12
            assert np.count_nonzero(p0[m] - np.diag(np.diag(p0[m]))) == 0
        assert not np.any(p2[0]) and not np.any(p4[0]) and not np.any(p4[1])

    def test_monotone_in_energy(self, grid, model):
        hi = build_phi(grid, model, -3.0)
        lo = build_phi(grid, model, -6.0)
        for m in hi.sectors():
            assert np.linalg.eigvalsh(lo[m] - hi[m])[0] >= -1e-12

    def test_one_particle_block_is_a_submatrix(self, grid, model, below_ground):
        phi = build_phi(grid, model, below_ground)[1]
        for total in (0, 4, 7):
            blk = phi_one_particle_block(grid, model, below_ground, total=total)
            d = grid.dim(1)
            angel = [int(np.flatnonzero(grid.sum_table[:, k] == total)[0]) for k in range(grid.M)]
            idx = [angel[k] * d + k for k in range(grid.M)]
            assert np.max(np.abs(phi[np.ix_(idx, idx)] - blk)) <= 1e-14


class TestBlockResolvent:
    def test_identities_hold(self, grid, model, below_ground):
        for rep in verify_block_resolvent_identities(grid, model, below_ground):
            assert rep.resolvent_residual <= 1e-10
            assert rep.phi_inverse_residual <= 1e-10
            assert rep.block_inverse_residual <= 1e-10

    def test_small_example(self):
        g = FockGrid.lattice((3, 1), 1.0, n_max=2)
        (rep,) = verify_block_resolvent_identities(g, CutoffModel(2.0, 1.0), -5.0, N=2)
        assert rep.N == 2
        assert max(rep.resolvent_residual, rep.phi_inverse_residual, rep.block_inverse_residual) <= 1e-12

    def test_at_eigenvalue(self, grid, model):
        E = ground_state_energy(grid, model, 2)
        with pytest.raises(AtEigenvalueError):
            verify_block_resolvent_identities(grid, model, E, N=2)


class TestPhiBounds:
    def test_energy_bound_in_log_space(self):
        assert log_energy_bound(1.0, 2) == pytest.approx(64 * math.pi)
        assert log_energy_bound(1e-300, 1) == 0.0

    def test_two_particles_have_no_interaction_part(self, grid, model):
        assert interaction_form_ratio(grid, model, -2.0, 2, samples=5, rng=0) == 0.0

    def test_bounds_far_below_threshold(self):
        g = FockGrid.lattice((3, 1), 1.0, n_max=3)
        rep = verify_phi_bounds(g, CutoffModel(10.0, 0.01), N=3, samples=30, rng=0, log_minus_E=450.0)
        assert rep.max_interaction_ratio <= rep.interaction_bound
        assert rep.max_interaction_ratio <= rep.sector_bound
        assert rep.positive

    def test_threshold_is_enforced(self, grid, model):
        with pytest.raises(DomainError):
            verify_phi_bounds(grid, model, -5.0, N=3)
        with pytest.raises(DomainError):
            verify_phi_bounds(grid, model, N=3, log_minus_E=log_energy_bound(model.mu, 3))
        with pytest.raises(DomainError):
            verify_phi_bounds(grid, model, -5.0, N=3, log_minus_E=1.0)

    def test_interaction_needs_energy_below_minus_one(self, grid, model):
        with pytest.raises(DomainError):
            interaction_form_ratio(grid, model, -0.5, 3)


class TestNumberBounds:
    def test_ratios_below_one(self, grid, model):
        rep = verify_number_bounds(grid, model, samples=20, rng=2)
        assert 0 < rep.max_ratio_number <= 1.0
        assert 0 < rep.max_ratio_energy <= 1.0

    def test_tail_constant_decays(self):
        g = FockGrid.lattice((9, 9), 0.5, n_max=1)
        tails = [tail_constant(g, lam) for lam in (0.5, 1.0, 2.0, 3.0)]
        assert all(a > b for a, b in zip(tails, tails[1:]))
        assert tail_constant(g, 10.0) == 0.0


class TestDiscreteDimer:
    def test_lattice_dimer_near_continuum(self):
        g = FockGrid.lattice((21, 21), 0.5, n_max=1)
        assert discrete_dimer_energy(g, CutoffModel(3.0, 1.0)) == pytest.approx(-1.0, abs=0.05)

    def test_phi_vanishes_at_dimer(self, grid, model):
        E = discrete_dimer_energy(grid, model)
        zero = int(np.argmin(np.linalg.norm(grid.momenta, axis=1)))
        phi0 = build_phi(grid, model, E)[0]
        assert phi0[zero, zero] == pytest.approx(0.0, abs=1e-10 / model.g)


class TestPotentialTerm:
    def test_zero_potential(self, grid):
        V = build_potential_term(grid, lambda r: 0.0 * r)
        for n in range(5):
            assert not np.any(V[n])

    def test_norm_bound(self, grid):
        v = GaussianPotential(amplitudes=(-0.5,), widths=(1.0,))
        V = build_potential_term(grid, v)
        assert not np.any(V[0]) and not np.any(V[1])
        for n in range(2, 5):
            assert np.max(np.abs(np.linalg.eigvalsh(V[n]))) <= n * n * v.sup_norm / 2 + 1e-12

    def test_constant_potential_counts_pairs(self):
        g = FockGrid.lattice((3, 1), 1.0, n_max=3)
        V = build_potential_term(g, lambda r: np.full_like(r, 0.3))
        for n in range(4):
            np.testing.assert_allclose(V[n], 0.3 * n * (n - 1) / 2 * np.eye(g.dim(n)), atol=1e-12)

    def test_sharp_identities(self, grid, model):
        v = GaussianPotential(amplitudes=(-0.5,), widths=(1.0,))
        V = build_potential_term(grid, v)
        E = min(ground_state_energy(grid, model, n, V=V) for n in (3, 4)) - 1.0
        for N in (3, 4):
            rep = verify_sharp_identities(grid, model, v, E, N)
            assert rep.resolvent_residual <= 1e-10
            assert rep.decomposition_residual <= 1e-10
            assert rep.potential_norm <= rep.potential_bound

    def test_zero_potential_leaves_phi_unchanged(self, grid, model, below_ground):
        rep = verify_sharp_identities(grid, model, lambda r: 0.0 * r, below_ground, 3, sup_norm=0.0)
        assert rep.potential_norm == 0.0
        assert rep.decomposition_residual <= 1e-13

    def test_plain_callable_needs_norm(self, grid, model):
        with pytest.raises(DomainError):
            verify_sharp_identities(grid, model, lambda r: 0.0 * r, -5.0, 3)


class TestFuzz:
    def test_deterministic_and_job_independent(self):
        a = run_fuzz_suite(4, seed=3, max_modes=6, max_particles=3)
        b = run_fuzz_suite(4, seed=3, max_modes=6, max_particles=3, jobs=2)
        assert a.to_json() == b.to_json()
        assert a.passed

    def test_corrupted_coupling_fails(self):
        rep = run_fuzz_suite(3, seed=0, corrupt_g=1.01, max_modes=6, max_particles=3)
        assert not rep.passed
        assert all(not inst["pass"] for inst in rep.instances)
