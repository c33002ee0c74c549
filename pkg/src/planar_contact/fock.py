"""Truncated Fock-space laboratory for the angel construction.

Momentum space is replaced by ``M`` points ``p_i`` with weights ``w_i``;
``int dp`` becomes ``sum_i w_i`` and ``delta(p - p')`` becomes
``delta_ij / w_i``, so ``[a_i, a*_j] = delta_ij / w_i``.  In terms of
orthonormal mode operators ``b_i`` this is ``a_i = b_i / sqrt(w_i)``.

The angel lives on the same points.  Pair momenta ``p_i + p_j`` must land on
a grid point; periodic lattices ``Z_L1 x Z_L2`` (momenta taken modulo the
lattice period) provide that closure.  ``H~_n = angel (x) H_n`` is ordered
angel-major: index ``P * dim(H_n) + s``.

Everything here is exact finite-dimensional algebra, so the operator
identities between ``B``, ``H_I`` and ``Phi`` hold to rounding.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from math import comb

import numpy as np
from scipy import sparse
from scipy.optimize import brentq

from .exceptions import AtEigenvalueError, DomainError, GridDesignError
from .kernels import CutoffModel, Dispersion

__all__ = [
    "FockGrid",
    "LadderFamily",
    "SectorOperator",
    "build_ladder",
    "build_b_lambda",
    "build_h_interaction",
    "verify_square_root_identity",
    "build_phi",
    "wick_split",
    "verify_block_resolvent_identities",
    "verify_phi_bounds",
    "interaction_form_ratio",
    "tail_constant",
    "discrete_dimer_energy",
    "verify_number_bounds",
    "build_potential_term",
    "verify_sharp_identities",
    "phi_one_particle_block",
    "ground_state_energy",
    "log_energy_bound",
    "run_fuzz_suite",
]

PAIR_NORM = 1.0 / (math.sqrt(2.0) * 2.0 * math.pi)
COND_LIMIT = 1e12


def log_energy_bound(mu, N):
    """``log e_N`` with ``e_N = max(1, mu^2 exp(16 pi N^2))``, kept in log space."""
    return max(0.0, 2.0 * math.log(mu) + 16.0 * math.pi * N * N)


# ---------------------------------------------------------------------------
# grid and bases
# ---------------------------------------------------------------------------

class FockGrid:
    """Finite momentum set with the symmetric Fock sectors ``H_0 .. H_nmax``."""

    dispersion = Dispersion.MANY_BODY

    def __init__(self, momenta, weights, sum_table, n_max=4, *, shape=None, spacing=None):
        momenta = np.atleast_2d(np.asarray(momenta, dtype=float))
        weights = np.asarray(weights, dtype=float)
        if momenta.shape[1] != 2 or weights.shape != (momenta.shape[0],):
            raise DomainError("momenta must be (M, 2) and weights (M,)")
        if np.any(weights <= 0):
            raise DomainError("weights must be positive")
        if len({tuple(p) for p in momenta}) != len(momenta):
            raise DomainError("momenta must be distinct")
        if n_max < 1:
            raise DomainError("n_max must be >= 1")
        self.momenta = momenta
        self.weights = weights
        self.sum_table = np.asarray(sum_table, dtype=int)
        self.n_max = int(n_max)
        self.shape = shape
        self.spacing = spacing
        self.omega = self.dispersion.omega(np.linalg.norm(momenta, axis=1))
        self._bases = {}
        self._ann = {}
        self._pairs = {}

    @classmethod
    def lattice(cls, shape=(3, 3), spacing=1.0, n_max=4, weights=None):
        """Periodic lattice ``spacing * Z_L1 x Z_L2`` with symmetric representatives."""
        shape = tuple(int(s) for s in np.atleast_1d(shape))
        if len(shape) == 1:
            shape = shape + (1,)
        if len(shape) != 2 or min(shape) < 1:
            raise DomainError("shape must have one or two positive entries")
        reps = [np.arange(L) - (L - 1) // 2 for L in shape]
        ints = np.array(list(itertools.product(*reps)), dtype=int)
        M = len(ints)
        slot = np.empty(shape, dtype=np.int32)
        slot[tuple(np.mod(ints, shape).T)] = np.arange(M)
        total = np.mod(ints[:, None, :] + ints[None, :, :], shape)
        table = slot[total[..., 0], total[..., 1]]
        if weights is None:
            weights = np.full(M, spacing**2)
        grid = cls(ints * float(spacing), weights, table, n_max, shape=shape, spacing=float(spacing))
        grid.integer_momenta = ints
        return grid

    @classmethod
    def from_momenta(cls, momenta, weights=None, n_max=4, decimals=12):
        """Arbitrary point set; every pair sum must itself be a point."""
        momenta = np.atleast_2d(np.asarray(momenta, dtype=float))
        M = len(momenta)
        if weights is None:
            weights = np.ones(M)
        key = {tuple(np.round(p, decimals)): k for k, p in enumerate(momenta)}
        table = np.empty((M, M), dtype=int)
        for i in range(M):
            for j in range(M):
                k = key.get(tuple(np.round(momenta[i] + momenta[j], decimals)))
                if k is None:
                    raise GridDesignError(
                        f"pair momentum {momenta[i] + momenta[j]} has no grid slot for the angel"
                    )
                table[i, j] = k
        return cls(momenta, weights, table, n_max)

    @property
    def M(self):
        return len(self.momenta)

    def dim(self, n):
        return comb(self.M + n - 1, n) if n >= 0 else 0

    def angel_dim(self, n):
        return self.M * self.dim(n)

    def basis(self, n):
        """Occupation tuples of sector ``n`` and their index map."""
        if n not in self._bases:
            states = []
            for modes in itertools.combinations_with_replacement(range(self.M), n):
                occ = [0] * self.M
                for m in modes:
                    occ[m] += 1
                states.append(tuple(occ))
            self._bases[n] = (states, {s: k for k, s in enumerate(states)})
        return self._bases[n]

    def annihilator(self, n, i):
        """Sparse ``a_i : H_n -> H_{n-1}``."""
        key = (n, i)
        if key not in self._ann:
            src, _ = self.basis(n)
            _, tgt = self.basis(n - 1)
            rows, cols, vals = [], [], []
            for c, s in enumerate(src):
                if s[i]:
                    t = list(s)
                    t[i] -= 1
                    rows.append(tgt[tuple(t)])
                    cols.append(c)
                    vals.append(math.sqrt(s[i] / self.weights[i]))
            self._ann[key] = sparse.csr_matrix((vals, (rows, cols)), shape=(self.dim(n - 1), self.dim(n)))
        return self._ann[key]

    def pair_annihilator(self, n, i, j):
        """Dense ``a_i a_j : H_n -> H_{n-2}``."""
        key = (n, i, j)
        if key not in self._pairs:
            self._pairs[key] = (self.annihilator(n - 1, i) @ self.annihilator(n, j)).toarray()
        return self._pairs[key]

    def h0(self, n):
        """Diagonal of ``H_0 = sum_i w_i omega_i a*_i a_i`` on sector ``n``."""
        states, _ = self.basis(n)
        if not states:
            return np.zeros(0)
        return np.asarray(states, dtype=float) @ self.omega

    def rho(self, lam):
        """``rho_lam((p_i - p_j)/2)`` as an ``M x M`` 0/1 matrix."""
        diff = self.momenta[:, None, :] - self.momenta[None, :, :]
        return (0.5 * np.linalg.norm(diff, axis=2) <= lam).astype(float)

    def positions(self):
        """Dual position lattice of a periodic momentum lattice."""
        if self.shape is None:
            raise GridDesignError("position space needs a periodic lattice grid")
        L = np.asarray(self.shape)
        return self.integer_momenta * (2.0 * math.pi / (L * self.spacing))


# ---------------------------------------------------------------------------
# operator containers
# ---------------------------------------------------------------------------

@dataclass
class LadderFamily:
    """``annihilators[n][i] : H_n -> H_{n-1}`` and their adjoints."""

    annihilators: dict
    creators: dict
    number: dict
    h0: dict
    dispersion: Dispersion = Dispersion.MANY_BODY


@dataclass
class SectorOperator:
    """Dense blocks keyed by source sector; ``source``/``target`` name the space."""

    blocks: dict
    source: str = "fock"
    target: str = "fock"
    shift: int = 0
    dispersion: Dispersion = Dispersion.MANY_BODY

    def __getitem__(self, n):
        return self.blocks[n]

    def sectors(self):
        return sorted(self.blocks)

    def adjoint(self):
        return SectorOperator(
            {n + self.shift: b.T.copy() for n, b in self.blocks.items()},
            source=self.target,
            target=self.source,
            shift=-self.shift,
            dispersion=self.dispersion,
        )


def build_ladder(grid):
    ann, cre, num, h0 = {}, {}, {}, {}
    for n in range(1, grid.n_max + 1):
        ann[n] = [grid.annihilator(n, i) for i in range(grid.M)]
        cre[n] = [a.T.tocsr() for a in ann[n]]
    for n in range(grid.n_max + 1):
        d = grid.dim(n)
        acc = sparse.csr_matrix((d, d))
        if n >= 1:
            for i in range(grid.M):
                acc = acc + grid.weights[i] * (cre[n][i] @ ann[n][i])
        num[n] = acc
        h0[n] = grid.h0(n)
    return LadderFamily(ann, cre, num, h0)


# ---------------------------------------------------------------------------
# B, H_I and the square-root identity
# ---------------------------------------------------------------------------

def _g(model):
    if model.is_limit:
        raise DomainError("the Fock laboratory needs a finite cutoff (g_lam > 0)")
    return model.g


def _b_block(grid, rho, n):
    d_out = grid.dim(n - 2)
    out = np.zeros((grid.angel_dim(n - 2), grid.dim(n)))
    w = grid.weights
    for i in range(grid.M):
        for j in range(grid.M):
            if rho[i, j] == 0.0:
                continue
            P = grid.sum_table[i, j]
            coef = PAIR_NORM * w[i] * w[j] * rho[i, j] / math.sqrt(w[P])
            out[P * d_out:(P + 1) * d_out] += coef * grid.pair_annihilator(n, i, j)
    return out


def build_b_lambda(grid, model):
    """``B_lam = (sqrt2 2pi)^-1 sum_ij w_i w_j rho_ij chi*(p_i+p_j) a_i a_j``, blocks ``H_n -> H~_{n-2}``.

    Sectors 0 and 1 map to the (empty) space and are stored as zero-row blocks.
    """
    if grid.n_max < 2:
        raise DomainError("B_lam needs n_max >= 2")
    rho = grid.rho(model.lam)
    blocks = {n: np.zeros((0, grid.dim(n))) for n in (0, 1)}
    for n in range(2, grid.n_max + 1):
        blocks[n] = _b_block(grid, rho, n)
    return SectorOperator(blocks, source="fock", target="angel", shift=-2)


def _apply_word(grid, word, state):
    """Apply ladder operators (rightmost first) to an occupation tuple.

    ``word`` is a sequence of ``(kind, mode)`` with kind ``'a'`` or ``'c'``.
    Returns ``(coefficient, new_state)`` or ``(0.0, None)``.
    """
    occ = list(state)
    coef = 1.0
    for kind, m in reversed(word):
        if kind == "a":
            if occ[m] == 0:
                return 0.0, None
            coef *= math.sqrt(occ[m] / grid.weights[m])
            occ[m] -= 1
        else:
            occ[m] += 1
            coef *= math.sqrt(occ[m] / grid.weights[m])
    return coef, tuple(occ)


def build_h_interaction(grid, model):
    """Cutoff pair interaction assembled term by term from occupation numbers.

    ``H_I = -g/(2(2pi)^2) sum w_k w_l w_i w_j rho_kl rho_ij
    a*_k a*_l delta(P_kl, P_ij)/w_P a_i a_j``; this deliberately does not
    reuse any matrix of :func:`build_b_lambda`.
    """
    g = _g(model)
    rho = grid.rho(model.lam)
    w = grid.weights
    pref = -g / (2.0 * (2.0 * math.pi) ** 2)
    by_total = {}
    for i in range(grid.M):
        for j in range(grid.M):
            if rho[i, j]:
                by_total.setdefault(grid.sum_table[i, j], []).append((i, j))
    blocks = {}
    for n in range(grid.n_max + 1):
        states, index = grid.basis(n)
        mat = np.zeros((len(states), len(states)))
        if n >= 2:
            for col, s in enumerate(states):
                for P, pairs in by_total.items():
                    for i, j in pairs:
                        c1, mid = _apply_word(grid, [("a", i), ("a", j)], s)
                        if mid is None:
                            continue
                        for k, l in pairs:
                            c2, out = _apply_word(grid, [("c", k), ("c", l)], mid)
                            mat[index[out], col] += pref * w[i] * w[j] * w[k] * w[l] * c1 * c2 / w[P]
        blocks[n] = mat
    return SectorOperator(blocks)


def verify_square_root_identity(grid, model, *, B=None, H_I=None, g=None):
    """Max entry of ``-g B*B - H_I`` over all sectors."""
    g = _g(model) if g is None else g
    B = build_b_lambda(grid, model) if B is None else B
    H_I = build_h_interaction(grid, model) if H_I is None else H_I
    worst = 0.0
    for n in range(grid.n_max + 1):
        diff = -g * B[n].T @ B[n] - H_I[n]
        if diff.size:
            worst = max(worst, float(np.max(np.abs(diff))))
    return worst


# ---------------------------------------------------------------------------
# Phi and its Wick decomposition
# ---------------------------------------------------------------------------

def _r0(grid, n, E):
    if not E < 0:
        raise DomainError("E must be negative")
    return 1.0 / (grid.h0(n) - E)


def build_phi(grid, model, E, *, B=None):
    """``Phi_lam(E) = g^-1 - B R_0(E) B*`` on every ``H~_m``, ``m <= n_max - 2``."""
    g = _g(model)
    B = build_b_lambda(grid, model) if B is None else B
    blocks = {}
    for n in range(2, grid.n_max + 1):
        Bn = B[n]
        phi = np.eye(Bn.shape[0]) / g - (Bn * _r0(grid, n, E)) @ Bn.T
        blocks[n - 2] = 0.5 * (phi + phi.T)
    return SectorOperator(blocks, source="angel", target="angel")


def wick_split(grid, model, E):
    """Normal-ordered pieces ``(Phi_0, Phi_I2, Phi_I4)`` of ``Phi_lam(E)``.

    ``Phi_0`` is the fully contracted (diagonal) term including ``g^-1``;
    ``Phi_I2`` carries one contraction and ``Phi_I4`` none.
    """
    g = _g(model)
    rho = grid.rho(model.lam)
    w, om, S = grid.weights, grid.omega, grid.sum_table
    M = grid.M
    c2 = PAIR_NORM**2
    phi0, phi2, phi4 = {}, {}, {}
    for m in range(0, grid.n_max - 1):
        d = grid.dim(m)
        h0 = grid.h0(m)
        diag = np.full(M * d, 1.0 / g)
        for i in range(M):
            for j in range(M):
                if rho[i, j]:
                    P = S[i, j]
                    diag[P * d:(P + 1) * d] -= 2 * c2 * w[i] * w[j] * rho[i, j] ** 2 / w[P] / (h0 + om[i] + om[j] - E)
        phi0[m] = np.diag(diag)

        two = np.zeros((M * d, M * d))
        if m >= 1:
            h0m = grid.h0(m - 1)
            for i in range(M):
                for j in range(M):
                    if not rho[i, j]:
                        continue
                    for l in range(M):
                        if not rho[i, l]:
                            continue
                        Pout, Pin = S[i, j], S[i, l]
                        coef = -4 * c2 * w[i] * w[j] * w[l] * rho[i, j] * rho[i, l] / math.sqrt(w[Pout] * w[Pin])
                        aj = grid.annihilator(m, j)
                        al = grid.annihilator(m, l)
                        mid = 1.0 / (h0m + om[i] + om[j] + om[l] - E)
                        two[Pout * d:(Pout + 1) * d, Pin * d:(Pin + 1) * d] += coef * (al.T @ (aj.multiply(mid[:, None]))).toarray()
        phi2[m] = two

        four = np.zeros((M * d, M * d))
        if m >= 2:
            h0m = grid.h0(m - 2)
            for i, j, k, l in itertools.product(range(M), repeat=4):
                if not (rho[i, j] and rho[k, l]):
                    continue
                Pout, Pin = S[i, j], S[k, l]
                coef = -c2 * w[i] * w[j] * w[k] * w[l] * rho[i, j] * rho[k, l] / math.sqrt(w[Pout] * w[Pin])
                Aij = grid.pair_annihilator(m, i, j)
                Akl = grid.pair_annihilator(m, k, l)
                mid = 1.0 / (h0m + om[i] + om[j] + om[k] + om[l] - E)
                four[Pout * d:(Pout + 1) * d, Pin * d:(Pin + 1) * d] += coef * Akl.T @ (mid[:, None] * Aij)
        phi4[m] = four
    wrap = lambda blocks: SectorOperator(blocks, source="angel", target="angel")
    return wrap(phi0), wrap(phi2), wrap(phi4)


# ---------------------------------------------------------------------------
# resolvent identities
# ---------------------------------------------------------------------------

def _checked_inverse(mat, what):
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise AtEigenvalueError(f"{what} is singular (condition number {cond:.3e})")
    return np.linalg.inv(mat)


def ground_state_energy(grid, model, N, *, V=None):
    """Lowest eigenvalue of ``H_0 + H_I (+ V')`` on sector ``N``."""
    H = np.diag(grid.h0(N)) + build_h_interaction(grid, model)[N]
    if V is not None:
        H = H + V[N]
    return float(np.linalg.eigvalsh(H)[0])


@dataclass
class BlockResolventReport:
    N: int
    E: float
    resolvent_residual: float
    phi_inverse_residual: float
    block_inverse_residual: float


def verify_block_resolvent_identities(grid, model, E, N=None, *, B=None, H_I=None):
    """Check ``R = R_0 + R_0 B* Phi^-1 B R_0`` and ``Phi^-1 = g + g^2 B R B*``.

    ``E`` must lie below the spectrum of ``H_lam`` on each checked sector.

    Also inverts the 2x2 block operator ``[[H_0-E, B*], [B, 1/g]]`` on
    ``H_N (+) H~_{N-2}`` and compares all four blocks with the closed forms.
    ``R`` is the dense inverse of ``H_0 + H_I - E``.  Returns one report per
    sector (or for ``N`` only).
    """
    g = _g(model)
    B = build_b_lambda(grid, model) if B is None else B
    H_I = build_h_interaction(grid, model) if H_I is None else H_I
    sectors = range(2, grid.n_max + 1) if N is None else [N]
    reports = []
    for n in sectors:
        Bn = B[n]
        r0 = _r0(grid, n, E)
        H = np.diag(grid.h0(n)) + H_I[n]
        ground = float(np.linalg.eigvalsh(H)[0])
        if E >= ground - 1e-9 * max(1.0, abs(ground)):
            raise AtEigenvalueError(f"E={E} is not below the lowest eigenvalue {ground:.6g} of H_lam on H_{n}")
        R = _checked_inverse(H - E * np.eye(len(H)), f"H_lam - E on H_{n}")
        phi = np.eye(Bn.shape[0]) / g - (Bn * r0) @ Bn.T
        phi_inv = _checked_inverse(phi, f"Phi_lam(E) on H~_{n - 2}")
        R0 = np.diag(r0)
        res1 = np.max(np.abs(R - R0 - R0 @ Bn.T @ phi_inv @ Bn @ R0))
        res2 = np.max(np.abs(phi_inv - g * np.eye(Bn.shape[0]) - g * g * Bn @ R @ Bn.T))

        big = np.block([[np.diag(grid.h0(n) - E), Bn.T], [Bn, np.eye(Bn.shape[0]) / g]])
        inv = _checked_inverse(big, "block operator")
        d = grid.dim(n)
        expect = np.block([[R, -g * R @ Bn.T], [-g * Bn @ R, g * np.eye(Bn.shape[0]) + g * g * Bn @ R @ Bn.T]])
        res3 = np.max(np.abs(inv - expect))
        # the (1,1) block is the point of the lemma; report it alongside
        res3 = max(res3, np.max(np.abs(inv[:d, :d] - R)))
        reports.append(BlockResolventReport(n, float(E), float(res1), float(res2), float(res3)))
    return reports


def interaction_form_ratio(grid, model, E, N, *, samples=100, rng=None):
    """Largest ``|<Psi, Phi_I Psi>| / ||Psi||^2`` over random ``Psi`` in ``H~_{N-2}``.

    The a-priori bound is ``2 N^2`` for any ``E < -1``.
    """
    if not E < -1.0:
        raise DomainError("the interaction bound needs E < -1")
    if not 2 <= N <= grid.n_max:
        raise DomainError(f"sector N={N} outside 2..{grid.n_max}")
    rng = np.random.default_rng(rng)
    _, phi2, phi4 = wick_split(grid, model, E)
    phi_i = phi2[N - 2] + phi4[N - 2]
    ratio = 0.0
    for _ in range(samples):
        psi = rng.standard_normal(phi_i.shape[0])
        ratio = max(ratio, abs(psi @ phi_i @ psi) / (psi @ psi))
    return float(ratio)


@dataclass
class PhiBoundReport:
    N: int
    E: float
    log_minus_E: float
    log_e_N: float
    samples: int
    max_interaction_ratio: float
    interaction_bound: float
    sector_bound: float
    min_eigenvalue: float
    positive: bool
    above_n_squared: bool


def verify_phi_bounds(grid, model, E=None, N=3, *, samples=100, rng=None, log_minus_E=None):
    """Bound checks for ``Phi_lam(E)`` on ``H~_{N-2}`` below ``-e_N``.

    ``max_interaction_ratio`` is compared with ``interaction_bound = 2 N^2``
    (``sector_bound`` is the sharper ``2 (N-2)^2`` of the sector's own
    particle number).  ``E`` may instead be given as ``log_minus_E``; the
    comparison with ``e_N`` is done in log space.
    """
    if (E is None) == (log_minus_E is None):
        raise DomainError("give exactly one of E and log_minus_E")
    if log_minus_E is None:
        if not E < 0:
            raise DomainError("E must be negative")
        log_minus_E = math.log(-E)
    log_e = log_energy_bound(model.mu, N)
    if not log_minus_E > log_e:
        raise DomainError(f"need E < -e_N: log(-E)={log_minus_E:.6g} <= log e_N={log_e:.6g}")
    if log_minus_E > 700.0:
        raise DomainError("|E| overflows double precision; choose a smaller N or mu")
    E = -math.exp(log_minus_E)
    ratio = interaction_form_ratio(grid, model, E, N, samples=samples, rng=rng)
    lam_min = float(np.linalg.eigvalsh(build_phi(grid, model, E)[N - 2])[0])
    return PhiBoundReport(
        N=N,
        E=E,
        log_minus_E=log_minus_E,
        log_e_N=log_e,
        samples=samples,
        max_interaction_ratio=ratio,
        interaction_bound=2.0 * N * N,
        sector_bound=2.0 * (N - 2) ** 2,
        min_eigenvalue=lam_min,
        positive=lam_min > 0,
        above_n_squared=lam_min >= N * N,
    )


def tail_constant(grid, lam):
    """Grid analog of ``(int_{|q| > lam} (omega(q) + 1)^-2 dq)^(1/2)``."""
    outside = np.linalg.norm(grid.momenta, axis=1) > lam
    return math.sqrt(float(np.sum(grid.weights[outside] / (grid.omega[outside] + 1.0) ** 2)))


def discrete_dimer_energy(grid, model):
    """Zero in ``E`` of ``Phi_lam(E)`` on ``H~_0`` at angel momentum zero.

    There ``Phi`` is the scalar ``g^-1 - (2pi)^-2 sum_{p_i+p_j=0} w_i w_j rho_ij / (w_0 (omega_i + omega_j - E))``.
    On a fine lattice extending past ``lam`` the zero approaches ``-mu^2``.
    """
    g = _g(model)
    zero = int(np.argmin(np.linalg.norm(grid.momenta, axis=1)))
    ii, jj = np.nonzero(grid.sum_table == zero)
    rho = (0.5 * np.linalg.norm(grid.momenta[ii] - grid.momenta[jj], axis=1) <= model.lam).astype(float)
    w, om = grid.weights, grid.omega
    num = w[ii] * w[jj] * rho / w[zero]
    level = om[ii] + om[jj]

    def phi(t):
        return 1.0 / g - np.sum(num / (level + math.exp(t))) / (2.0 * math.pi) ** 2

    lo, hi = -40.0, 40.0
    if phi(lo) * phi(hi) > 0:
        raise DomainError("no two-body bound state on this grid")
    return -math.exp(brentq(phi, lo, hi, xtol=1e-14))


@dataclass
class NumberBoundReport:
    max_ratio_number: float
    max_ratio_energy: float
    rho_norm: float
    energy_constant: float


def verify_number_bounds(grid, model, *, samples=50, rng=None):
    """Ratios of ``||B psi||`` to its two a-priori bounds (both must stay <= 1).

    ``||B psi|| <= c rho_grid ||(N(N-1))^{1/2} psi||`` and
    ``||B psi|| <= c C_grid ||(H_0 + N) psi||`` with ``c = (sqrt2 2pi)^-1``
    and the grid constants ``rho_grid^2 = max_P sum_{P_ij=P} w_i w_j rho_ij^2 / w_P``,
    ``C_grid^2 = max_P sum_{P_ij=P} w_i w_j / ((omega_i+1)(omega_j+1) w_P)``.
    """
    rng = np.random.default_rng(rng)
    B = build_b_lambda(grid, model)
    rho = grid.rho(model.lam)
    w, om, S = grid.weights, grid.omega, grid.sum_table
    rsum = np.zeros(grid.M)
    csum = np.zeros(grid.M)
    for i in range(grid.M):
        for j in range(grid.M):
            rsum[S[i, j]] += w[i] * w[j] * rho[i, j] ** 2
            csum[S[i, j]] += w[i] * w[j] / ((om[i] + 1) * (om[j] + 1))
    rho_norm = math.sqrt(np.max(rsum / w))
    C = math.sqrt(np.max(csum / w))
    r1 = r2 = 0.0
    for n in range(2, grid.n_max + 1):
        for _ in range(samples):
            psi = rng.standard_normal(grid.dim(n))
            nb = np.linalg.norm(B[n] @ psi)
            r1 = max(r1, nb / (PAIR_NORM * rho_norm * math.sqrt(n * (n - 1)) * np.linalg.norm(psi)))
            r2 = max(r2, nb / (PAIR_NORM * C * np.linalg.norm((grid.h0(n) + n) * psi)))
    return NumberBoundReport(r1, r2, rho_norm, C)


# ---------------------------------------------------------------------------
# additional bounded pair potential
# ---------------------------------------------------------------------------

def build_potential_term(grid, v):
    """Momentum-space pair potential ``V'`` on every sector.

    ``v`` is a radial callable.  On the dual position lattice ``x`` of a
    periodic momentum grid,
    ``V = 1/2 sum_{x,y} v(|x - y|) c*_x c*_y c_y c_x``; in momentum modes this
    is ``(1/2M) sum v~(p1 - p1') b*_{p1'} b*_{p2'} b_{p2} b_{p1}`` over
    momentum-conserving quadruples, with ``v~(k) = sum_z v(|z|) exp(i k z)``.
    """
    if grid.shape is None:
        raise GridDesignError("V' needs a periodic lattice grid")
    L = np.asarray(grid.shape)
    z = grid.positions()
    ints = grid.integer_momenta
    M = grid.M
    vz = np.asarray(v(np.linalg.norm(z, axis=1)), dtype=float)
    # phase exp(2 pi i m.n / L) between integer momentum m and position index n
    phase = np.exp(2j * math.pi * (ints / L) @ ints.T)
    vtilde = (phase @ vz).real  # indexed by the integer momentum of the transfer
    diff_index = np.empty((M, M), dtype=int)
    lookup = {tuple(np.mod(v_, L)): k for k, v_ in enumerate(ints)}
    for i in range(M):
        for j in range(M):
            diff_index[i, j] = lookup[tuple(np.mod(ints[i] - ints[j], L))]
    S = grid.sum_table
    sqw = np.sqrt(grid.weights)
    blocks = {}
    for n in range(grid.n_max + 1):
        d = grid.dim(n)
        mat = np.zeros((d, d))
        if n >= 2:
            for p1, p2, q1 in itertools.product(range(M), repeat=3):
                P = S[p1, p2]
                # q2 with q1 + q2 = p1 + p2
                q2 = lookup[tuple(np.mod(ints[P] - ints[q1], L))]
                coef = vtilde[diff_index[p1, q1]] / (2.0 * M)
                # b = sqrt(w) a on each leg
                coef *= sqw[p1] * sqw[p2] * sqw[q1] * sqw[q2]
                ann = grid.pair_annihilator(n, p2, p1)
                cre = grid.pair_annihilator(n, q1, q2).T
                mat += coef * (cre @ ann)
        blocks[n] = 0.5 * (mat + mat.T)
    return SectorOperator(blocks)


@dataclass
class SharpIdentityReport:
    N: int
    E: float
    potential_norm: float
    potential_bound: float
    resolvent_residual: float
    decomposition_residual: float


def verify_sharp_identities(grid, model, v, E, N, *, sup_norm=None):
    """Resolvent identities with the extra pair potential on sector ``N``.

    Checks ``R# = R_1 + R_1 B* Phi#^-1 B R_1`` against the dense inverse of
    ``H_0 + V' + H_I - E`` and the decomposition
    ``Phi# = Phi + B R_0 V' R_0 B* - B R_0 V' R_1 V' R_0 B*``.
    """
    g = _g(model)
    if sup_norm is None:
        sup_norm = getattr(v, "sup_norm", None)
    if sup_norm is None:
        raise DomainError("pass sup_norm for a plain callable potential")
    V = build_potential_term(grid, v)
    B = build_b_lambda(grid, model)
    H_I = build_h_interaction(grid, model)
    Bn, Vn = B[N], V[N]
    r0 = _r0(grid, N, E)
    R0 = np.diag(r0)
    R1 = _checked_inverse(np.diag(grid.h0(N) - E) + Vn, "H_1 - E")
    Rs = _checked_inverse(np.diag(grid.h0(N) - E) + Vn + H_I[N], "H#_lam - E")
    eye = np.eye(Bn.shape[0])
    phi_sharp = eye / g - Bn @ R1 @ Bn.T
    phi_sharp_inv = _checked_inverse(phi_sharp, "Phi#_lam(E)")
    res1 = np.max(np.abs(Rs - R1 - R1 @ Bn.T @ phi_sharp_inv @ Bn @ R1))
    phi = eye / g - Bn @ R0 @ Bn.T
    recon = phi + Bn @ R0 @ Vn @ R0 @ Bn.T - Bn @ R0 @ Vn @ R1 @ Vn @ R0 @ Bn.T
    res2 = np.max(np.abs(phi_sharp - recon))
    vnorm = float(np.max(np.abs(np.linalg.eigvalsh(Vn)))) if Vn.size else 0.0
    return SharpIdentityReport(N, float(E), vnorm, N * N * sup_norm / 2.0, float(res1), float(res2))


# ---------------------------------------------------------------------------
# one-particle angel sector at fixed total momentum
# ---------------------------------------------------------------------------

def phi_one_particle_block(grid, model, E, total=None):
    """``Phi_lam(E)`` on ``H~_1`` restricted to total momentum ``total``.

    Basis: particle at ``p_k``, angel at ``total - p_k`` (index order ``k``).
    Only the one-contraction term survives besides the diagonal; its matrix
    elements are written out directly, which makes large lattices cheap.
    """
    g = _g(model)
    if total is None:
        total = int(np.argmin(np.linalg.norm(grid.momenta, axis=1)))
    M = grid.M
    w, om = grid.weights, grid.omega
    rho = grid.rho(model.lam)
    diff = _difference_table(grid)
    inv = diff[total]  # angel slot total - p_k for particle k
    c2 = PAIR_NORM**2
    ar = np.arange(M)
    diag = np.full(M, 1.0 / g)
    for k in range(M):
        P = inv[k]
        j = diff[P]  # partner of i inside the pair with momentum P
        diag[k] -= 2 * c2 * np.sum(w * w[j] * rho[ar, j] / w[P] / (om[k] + om + om[j] - E))
    # <P_out, k_out| Phi_I2 |P_in, k_in> with exchanged particle i = P_in - k_out
    i = diff[inv[None, :], ar[:, None]]  # rows k_out, columns k_in
    sw = np.sqrt(w)
    coef = -4 * c2 * w[i] * np.outer(sw, sw) * rho[i, ar[None, :]] * rho[i, ar[:, None]]
    coef /= np.sqrt(np.outer(w[inv], w[inv]))
    mat = np.diag(diag) + coef / (om[i] + om[None, :] + om[:, None] - E)
    return 0.5 * (mat + mat.T)


def _difference_table(grid):
    """``diff[a, b]`` = index of ``p_a - p_b``; requires a group structure."""
    M = grid.M
    diff = np.full((M, M), -1, dtype=int)
    for b in range(M):
        col = grid.sum_table[:, b]
        if len(set(col.tolist())) != M:
            raise GridDesignError("grid is not a group under addition")
        diff[col, b] = np.arange(M)
    return diff


# ---------------------------------------------------------------------------
# randomized identity suite
# ---------------------------------------------------------------------------

FUZZ_SHAPES = ((3, 1), (5, 1), (2, 2), (3, 2), (3, 3), (7, 1), (9, 1), (4, 3), (5, 3), (4, 4))


@dataclass
class FuzzReport:
    seed: int
    instances: list = field(default_factory=list)
    tolerance_sqrt: float = 1e-10
    tolerance_block: float = 1e-8

    @property
    def passed(self):
        return all(inst["pass"] for inst in self.instances)

    def to_json(self):
        body = asdict(self)
        body["passed"] = self.passed
        return json.dumps(body, indent=2, sort_keys=True)


def _fmt(x):
    return float(f"{x:.6e}")


def fuzz_instance(rng, *, corrupt_g=1.0, max_modes=9, max_particles=4):
    """Draw and check one random laboratory instance."""
    shapes = [s for s in FUZZ_SHAPES if s[0] * s[1] <= max_modes]
    shape = shapes[rng.integers(len(shapes))]
    M = shape[0] * shape[1]
    n_max = int(rng.integers(2, max_particles + 1)) if M <= 9 else 3
    spacing = float(rng.uniform(0.4, 1.5))
    weights = spacing**2 * rng.uniform(0.7, 1.3, size=M)
    grid = FockGrid.lattice(shape, spacing, n_max=n_max, weights=weights)
    model = CutoffModel(lam=float(rng.uniform(1.0, 10.0)), mu=float(rng.uniform(0.1, 2.0)))
    B = build_b_lambda(grid, model)
    H_I = build_h_interaction(grid, model)
    sq = verify_square_root_identity(grid, model, B=B, H_I=H_I, g=model.g * corrupt_g)
    ground = min(ground_state_energy(grid, model, n) for n in range(2, n_max + 1))
    E = min(ground, 0.0) - float(rng.uniform(0.5, 3.0))
    reps = verify_block_resolvent_identities(grid, model, E, B=B, H_I=H_I)
    r1 = max(r.resolvent_residual for r in reps)
    r2 = max(r.phi_inverse_residual for r in reps)
    r3 = max(r.block_inverse_residual for r in reps)
    ok = sq <= 1e-10 and max(r1, r2, r3) <= 1e-8
    return {
        "shape": list(shape),
        "M": M,
        "n_max": n_max,
        "spacing": _fmt(spacing),
        "lam": _fmt(model.lam),
        "mu": _fmt(model.mu),
        "E": _fmt(E),
        "sqrt_identity_residual": _fmt(sq),
        "resolvent_residual": _fmt(r1),
        "phi_inverse_residual": _fmt(r2),
        "block_inverse_residual": _fmt(r3),
        "pass": bool(ok),
    }


def run_fuzz_suite(n_instances=20, seed=0, *, corrupt_g=1.0, jobs=1, max_modes=9, max_particles=4):
    """Randomized identity checks; deterministic for a given seed.

    Each instance gets its own child seed so results do not depend on
    ``jobs`` or on completion order.
    """
    children = np.random.SeedSequence(seed).spawn(n_instances)
    args = [np.random.default_rng(c) for c in children]
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            instances = list(pool.map(lambda r: fuzz_instance(r, corrupt_g=corrupt_g, max_modes=max_modes, max_particles=max_particles), args))
    else:
        instances = [fuzz_instance(r, corrupt_g=corrupt_g, max_modes=max_modes, max_particles=max_particles) for r in args]
    return FuzzReport(seed=seed, instances=instances)
