"""Three bosons at zero total momentum: bound states from the renormalized ``Phi(E)``.

On the one-particle angel sector with total momentum zero the spectator
particle carries momentum ``q`` and the angel ``-q``.  There ``Phi(E)`` is
multiplication by ``(4 pi)^-1 log((3 q^2/4 - E)/mu^2)`` plus the exchange
kernel ``-(2 pi^2)^-1 / (q^2 + q'^2 + q.q' - E)``.  Rotation invariance
reduces this to a radial Nystrom matrix for each angular harmonic.

Bound-state energies are where an eigenvalue of that matrix crosses zero.
The default grid reaches ``1e7 * mu``: the kernel decays only like ``1/q``
and a cutoff at ``1e3 * mu`` shifts the ground state by about 4e-4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eigh
from scipy.optimize import brentq

from .exceptions import BracketError, DomainError, NumericalError
from .kernels import RadialGrid, angular_average, build_radial_grid
from .fock import log_energy_bound

__all__ = [
    "StmOperator",
    "WOperator",
    "TrimerResult",
    "dimer_energy_from_phi",
    "build_stm_operator",
    "smallest_eigenvalue",
    "negative_count",
    "default_schedule",
    "find_trimer_energies",
    "scaled_operator_w",
    "verify_scaling_identity",
]

ROOT_XTOL = 1e-13
EDGE_TOL = 1e-12


def _harmonic_average(A, B, ell):
    """``(2pi)^-1 int cos(ell t) / (A + B cos t) dt`` for ``A > |B|``."""
    base = angular_average(A, B)
    if ell == 0:
        return base
    root = 1.0 / base
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(B != 0, (root - A) / np.where(B != 0, B, 1.0), 0.0)
    return base * ratio ** abs(ell)


def _kernel(q, w, E, ell=0):
    s = np.sqrt(w * q)
    A = q[:, None] ** 2 + q[None, :] ** 2 - E
    B = np.outer(q, q)
    return -(1.0 / math.pi) * np.outer(s, s) * _harmonic_average(A, B, ell)


@dataclass(frozen=True, eq=False)
class StmOperator:
    """Discretized ``Phi(E)`` on the zero-momentum three-body sector.

    ``matrix`` acts on coordinates ``sqrt(w q) f(q)``.
    """

    E: float
    mu: float
    grid: RadialGrid
    diagonal: np.ndarray
    kernel: np.ndarray
    ell: int = 0

    @property
    def matrix(self):
        return np.diag(self.diagonal) + self.kernel


@dataclass(frozen=True, eq=False)
class WOperator:
    """``Phi(E)`` after scaling momenta by ``sqrt(-E)``, minus ``(4pi)^-1 log(-E/mu^2)``."""

    grid: RadialGrid
    diagonal: np.ndarray
    kernel: np.ndarray
    eigenvalues: np.ndarray

    @property
    def matrix(self):
        return np.diag(self.diagonal) + self.kernel

    @property
    def negative_eigenvalues(self):
        return self.eigenvalues[self.eigenvalues < 0]

    def energies(self, mu):
        """``-mu^2 exp(-4 pi w_k)`` for each negative eigenvalue, deepest first."""
        return sorted(float(e) for e in -(mu**2) * np.exp(-4.0 * math.pi * self.negative_eigenvalues))


@dataclass
class TrimerResult:
    mu: float
    bracket: tuple
    energies: list
    per_grid: list
    grid_sizes: list
    extrapolated: list
    drift: list
    scans: list = field(default_factory=list)
    log_e3: float = 0.0

    @property
    def ratios(self):
        return [E / -(self.mu**2) for E in self.energies]

    @property
    def within_energy_bound(self):
        """All energies ``>= -e_3`` (compared in log space)."""
        return all(math.log(-E) <= self.log_e3 for E in self.energies)


def dimer_energy_from_phi(mu, p=0.0):
    """Zero of ``(4pi)^-1 log((p^2/4 - E)/mu^2)``: the dimer riding on total momentum ``p``."""
    if not mu > 0:
        raise DomainError("mu must be positive")
    shift = 0.25 * p * p
    m2 = mu * mu

    def phi0(E):
        return math.log((shift - E) / m2) / (4.0 * math.pi)

    return brentq(phi0, shift - 10.0 * m2, shift - 0.1 * m2, xtol=1e-15 * max(m2, 1.0), rtol=4 * np.finfo(float).eps)


def _check_grid(grid):
    if not isinstance(grid, RadialGrid):
        raise DomainError("grid must be a RadialGrid")


def build_stm_operator(mu, E, grid, ell=0):
    if not E < 0:
        raise DomainError("E must be negative")
    if not mu > 0:
        raise DomainError("mu must be positive")
    _check_grid(grid)
    q, w = grid.nodes, grid.weights
    diag = np.log((0.75 * q**2 - E) / mu**2) / (4.0 * math.pi)
    return StmOperator(float(E), float(mu), grid, diag, _kernel(q, w, E, ell), ell)


def _eigvals(mat, lo, hi):
    try:
        return eigh(mat, eigvals_only=True, subset_by_index=[lo, hi])
    except LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"eigensolver failed: {exc}") from exc


def smallest_eigenvalue(op):
    return float(_eigvals(op.matrix, 0, 0)[0])


def negative_count(op):
    """Number of negative eigenvalues of ``op`` (equivalently, trimers above ``op.E``)."""
    return int(np.count_nonzero(np.linalg.eigvalsh(op.matrix) < 0))


def default_schedule(mu=1.0, sizes=(200, 400, 800), order=8, q_min=1e-4, q_max=1e7):
    """Log grids on ``(q_min mu, q_max mu)`` with the given node counts."""
    return [build_radial_grid(q_min * mu, q_max * mu, n // order, order) for n in sizes]


def _richardson(values):
    """Extrapolate a sequence from doubled grids; falls back to the last value."""
    if len(values) < 3:
        return values[-1]
    a, b, c = values[-3:]
    d1, d2 = b - a, c - b
    if d2 == 0 or d1 == 0 or abs(d2) >= abs(d1) or d1 * d2 < 0:
        return c
    r = d2 / d1
    return c + d2 * r / (1.0 - r)


def _roots_on_grid(mu, bracket, grid, ell, scan_points):
    lo_E, hi_E = min(bracket), max(bracket)
    t_lo, t_hi = math.log(-hi_E), math.log(-lo_E)  # t = log(-E)

    def eig_k(t, k):
        op = build_stm_operator(mu, -math.exp(t), grid, ell)
        return float(_eigvals(op.matrix, k, k)[0])

    def count(t):
        ev = np.linalg.eigvalsh(build_stm_operator(mu, -math.exp(t), grid, ell).matrix)
        if np.min(np.abs(ev)) < EDGE_TOL:
            raise BracketError(f"an eigenvalue vanishes at the bracket edge E={-math.exp(t):.6g}")
        return int(np.count_nonzero(ev < 0))

    n_shallow, n_deep = count(t_lo), count(t_hi)
    roots = []
    # eigenvalue k is negative at the shallow end and positive at the deep end
    for k in range(n_deep, n_shallow):
        t = brentq(lambda s: eig_k(s, k), t_lo, t_hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)
        roots.append(-math.exp(t))
    scan = []
    for t in np.linspace(t_lo, t_hi, scan_points):
        scan.append((-math.exp(t), eig_k(t, 0)))
    return sorted(roots), scan


def find_trimer_energies(mu, E_bracket=None, grid_schedule=None, *, ell=0, scan_points=25, jobs=1):
    """Zero crossings of the eigenvalues of the reduced ``Phi(E)`` inside ``E_bracket``.

    Each eigenvalue grows monotonically as ``E`` decreases, so the number of
    crossings equals the drop in the count of negative eigenvalues across the
    bracket.  Every crossing is refined with Brent's method in ``log(-E)``.
    ``energies`` are from the finest grid; ``extrapolated`` applies a
    Richardson step across the schedule.
    """
    if not mu > 0:
        raise DomainError("mu must be positive")
    if E_bracket is None:
        E_bracket = (-30.0 * mu**2, -1.01 * mu**2)
    lo, hi = min(E_bracket), max(E_bracket)
    if not hi < -(mu**2):
        raise DomainError("bracket must lie below the dimer energy -mu^2")
    grids = default_schedule(mu) if grid_schedule is None else list(grid_schedule)
    if not grids:
        raise DomainError("empty grid schedule")

    work = lambda g: _roots_on_grid(mu, (lo, hi), g, ell, scan_points)
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, grids))
    else:
        results = [work(g) for g in grids]

    per_grid = [r for r, _ in results]
    scans = [s for _, s in results]
    finest = per_grid[-1]
    counts = {len(r) for r in per_grid}
    if len(counts) > 1:
        raise NumericalError(f"crossing count changes along the grid schedule: {[len(r) for r in per_grid]}")
    columns = list(zip(*per_grid))
    extrapolated = [_richardson(list(col)) for col in columns]
    drift = [abs(col[-1] - col[-2]) / abs(col[-1]) if len(col) > 1 else 0.0 for col in columns]
    return TrimerResult(
        mu=float(mu),
        bracket=(lo, hi),
        energies=list(finest),
        per_grid=per_grid,
        grid_sizes=[len(g) for g in grids],
        extrapolated=extrapolated,
        drift=drift,
        scans=scans,
        log_e3=log_energy_bound(mu, 3),
    )


def scaled_operator_w(grid, ell=0):
    """The energy-independent part of ``Phi(E)`` in units where ``-E = 1``."""
    _check_grid(grid)
    q, w = grid.nodes, grid.weights
    diag = np.log1p(0.75 * q**2) / (4.0 * math.pi)
    kern = _kernel(q, w, -1.0, ell)
    return WOperator(grid, diag, kern, np.linalg.eigvalsh(np.diag(diag) + kern))


def verify_scaling_identity(grid, mu, E, ell=0):
    """Max deviation between ``Phi(E)`` on ``grid * sqrt(-E)`` and ``(4pi)^-1 log(-E/mu^2) + W``."""
    if not E < 0:
        raise DomainError("E must be negative")
    W = scaled_operator_w(grid, ell)
    phi = build_stm_operator(mu, E, grid.scaled(math.sqrt(-E)), ell)
    shift = math.log(-E / mu**2) / (4.0 * math.pi)
    return float(np.max(np.abs(phi.matrix - W.matrix - shift * np.eye(len(grid)))))
