"""Two-body point interaction in relative coordinates (``H_0 = p^2``).

The cutoff Hamiltonian ``H_lam = p^2 - g_lam/(2 pi)^2 |rho_lam><rho_lam|`` is a
rank-one perturbation of ``p^2``, so every resolvent here is of
Sherman-Morrison (Krein) form ``R_0 + c |v><v|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import digamma

from .exceptions import AtEigenvalueError, DomainError, InsufficientDataError, PoleError
from .kernels import (
    CutoffModel,
    Dispersion,
    GridFunction,
    RadialGrid,
    build_radial_grid,
    fit_loglog_slope,
    xi,
    xi_lambda,
)

POLE_TOL = 1e-8

__all__ = [
    "RankOneResolvent",
    "SpectralReport",
    "SpectralCondition",
    "cutoff_resolvent",
    "exact_resolvent",
    "resolvent_cutoff",
    "resolvent_exact",
    "bound_state",
    "cutoff_bound_state_energy",
    "spectral_condition",
    "aghh_alpha_from_mu",
    "aghh_mu_from_alpha",
    "cutoff_hamiltonian_matrix",
    "default_probes",
    "default_grid",
    "convergence_report",
]


def _require_negative(E):
    if not (E < 0):
        raise DomainError(f"energy must be negative, got {E!r}")


@dataclass(frozen=True, eq=False)
class RankOneResolvent:
    """``psi -> base * psi + scalar * <vector, psi> * vector`` on a radial grid.

    ``base`` holds the diagonal of ``R_0(E) = (p^2 - E)^-1``.  ``vector`` is
    rotation invariant, so only the ``ell = 0`` harmonic sees the rank-one
    part.
    """

    grid: RadialGrid
    energy: float
    base: np.ndarray
    scalar: float
    vector: GridFunction
    dispersion: Dispersion = Dispersion.TWO_BODY

    def apply(self, psi):
        if psi.grid is not self.grid:
            raise DomainError("psi lives on a different grid")
        out = GridFunction(self.grid, self.base * psi.values, psi.ell)
        if psi.ell == 0:
            out = out + self.scalar * self.vector.inner(psi) * self.vector
        return out

    __call__ = apply

    def matrix(self):
        """Dense ``ell = 0`` matrix in the orthonormalized coordinates ``sqrt(2 pi q w) f``."""
        s = self.grid.sqrt_planar_weights * self.vector.values
        return np.diag(self.base) + self.scalar * np.outer(s, s)


class SpectralCondition(NamedTuple):
    in_resolvent_set: bool
    margin: float


@dataclass
class SpectralReport:
    """Discrete spectrum plus convergence measurements."""

    energies: list
    eigenvectors: list
    lambda_schedule: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    cutoff_energies: list = field(default_factory=list)

    def __post_init__(self):
        order = np.argsort(self.energies) if self.energies else []
        self.energies = [float(self.energies[i]) for i in order]
        self.eigenvectors = [self.eigenvectors[i] for i in order] if self.eigenvectors else []


# ---------------------------------------------------------------------------

def spectral_condition(model, E):
    """Whether ``E`` is in the resolvent set of ``H_lam``.

    The margin is ``(2pi)^2/g_lam - (rho_lam, R_0(E) rho_lam) = xi_lam(mu^2, -E)``.
    """
    _require_negative(E)
    margin = xi_lambda(model.mu**2, -E, model.lam)
    return SpectralCondition(abs(margin) >= POLE_TOL, margin)


def cutoff_resolvent(model, E, grid, *, closed_form=True):
    """Rank-one representation of ``R_lam(E)`` on ``grid``.

    With ``closed_form=False`` the scalar product ``(rho, R_0 rho)`` is taken
    by quadrature instead of ``pi log(lam^2/(-E) + 1)``; the result is then
    the exact inverse of the discretized Hamiltonian.
    """
    _require_negative(E)
    if model.is_limit:
        return exact_resolvent(model.mu, E, grid)
    q = grid.nodes
    base = 1.0 / (q**2 - E)
    rho = (q <= model.lam).astype(float)
    vector = GridFunction(grid, rho * base)
    if closed_form:
        denom = xi_lambda(model.mu**2, -E, model.lam)
    else:
        denom = model.inverse_coupling - grid.integrate_planar(rho * base)
    if abs(denom) < POLE_TOL:
        raise AtEigenvalueError(f"E={E!r} is an eigenvalue of the cutoff Hamiltonian")
    return RankOneResolvent(grid, float(E), base, 1.0 / denom, vector)


def exact_resolvent(mu, E, grid):
    """Rank-one representation of the renormalized ``R(E)``."""
    _require_negative(E)
    denom = xi(mu**2, -E)
    if abs(denom) < POLE_TOL:
        raise PoleError(f"E={E!r} is the bound-state pole -mu^2")
    base = 1.0 / (grid.nodes**2 - E)
    return RankOneResolvent(grid, float(E), base, 1.0 / denom, GridFunction(grid, base.copy()))


def resolvent_cutoff(model, E, psi):
    """``R_lam(E) psi`` for a grid function ``psi``."""
    return cutoff_resolvent(model, E, psi.grid).apply(psi)


def resolvent_exact(mu, E, psi):
    """``R(E) psi = R_0(E) psi + xi(mu^2, -E)^-1 <Omega_E, psi> Omega_E``."""
    return exact_resolvent(mu, E, psi.grid).apply(psi)


def bound_state(mu, grid):
    """The dimer: energy ``-mu^2`` and normalized ``(p^2 + mu^2)^-1`` on ``grid``."""
    if not mu > 0:
        raise DomainError("mu must be positive")
    omega = GridFunction(grid, 1.0 / (grid.nodes**2 + mu**2))
    return -mu**2, omega.normalized()


def cutoff_bound_state_energy(model):
    """Root of the spectral margin ``xi_lam(mu^2, -E)`` in ``E < 0``.

    The margin is monotone in ``E`` and vanishes exactly at ``-mu^2`` for any
    finite cutoff.
    """
    mu2 = model.mu**2

    def margin(t):
        return xi_lambda(mu2, mu2 * math.exp(t), model.lam)

    t = brentq(margin, -5.0, 5.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return -mu2 * math.exp(t)


def aghh_alpha_from_mu(mu):
    """Boundary-condition parameter of the point-interaction family for scale ``mu``."""
    if not mu > 0:
        raise DomainError("mu must be positive")
    return (float(digamma(1.0)) + math.log(2.0) - math.log(mu)) / (2.0 * math.pi)


def aghh_mu_from_alpha(alpha):
    return math.exp(-2.0 * math.pi * alpha + float(digamma(1.0)) + math.log(2.0))


def cutoff_hamiltonian_matrix(model, grid):
    """Dense ``ell = 0`` matrix of ``H_lam`` in coordinates ``sqrt(2 pi q w) f``."""
    q = grid.nodes
    r = grid.sqrt_planar_weights * (q <= model.lam)
    return np.diag(q**2) - model.g / (2.0 * math.pi) ** 2 * np.outer(r, r)


def default_grid(lambdas=(), q_min=1e-8, q_max=1e6, panels=56, order=12):
    """Log grid with panel edges at every cutoff in ``lambdas``."""
    return build_radial_grid(q_min, q_max, panels, order, breakpoints=tuple(lambdas))


def default_probes(grid):
    """Gaussians of widths 0.5, 1, 2 and one ``ell = 1`` harmonic."""
    q = grid.nodes
    probes = [GridFunction(grid, np.exp(-0.5 * (q / s) ** 2)) for s in (0.5, 1.0, 2.0)]
    probes.append(GridFunction(grid, q * np.exp(-0.5 * q**2), ell=1))
    return probes


def convergence_report(mu, E_list, lambda_schedule, probes=None, grid=None):
    """Measure ``||R_lam(E) psi - R(E) psi||`` along a cutoff schedule.

    ``rates[E]`` lists the fitted log-log slope for every probe whose error
    is not identically zero (``ell != 0`` probes are untouched by the
    interaction).  ``cutoff_energies`` is the bound state of each cutoff
    Hamiltonian.
    """
    lambdas = sorted(float(l) for l in lambda_schedule)
    if len(lambdas) < 3:
        raise InsufficientDataError("need at least three cutoffs to fit a rate")
    if grid is None:
        grid = default_grid(lambdas)
    if probes is None:
        probes = default_probes(grid)
    for E in E_list:
        _require_negative(E)
        if abs(xi(mu**2, -E)) < POLE_TOL:
            raise PoleError(f"E={E!r} is the bound-state pole -mu^2")

    rates, errors = {}, {}
    for E in E_list:
        exact = exact_resolvent(mu, E, grid)
        limits = [exact.apply(psi) for psi in probes]
        table = np.zeros((len(lambdas), len(probes)))
        for i, lam in enumerate(lambdas):
            op = cutoff_resolvent(CutoffModel(lam, mu), E, grid)
            for j, psi in enumerate(probes):
                table[i, j] = (op.apply(psi) - limits[j]).norm()
        errors[float(E)] = table
        rates[float(E)] = [
            fit_loglog_slope(lambdas, table[:, j])
            for j in range(len(probes))
            if np.all(table[:, j] > 0)
        ]

    energy, vec = bound_state(mu, grid)
    return SpectralReport(
        energies=[energy],
        eigenvectors=[vec],
        lambda_schedule=lambdas,
        rates=rates,
        errors=errors,
        cutoff_energies=[cutoff_bound_state_energy(CutoffModel(l, mu)) for l in lambdas],
    )
