"""Point interaction plus a bounded radial potential ``v``.

``v' = F v F^-1`` acts on the ``ell``-th angular harmonic through the
Hankel kernel ``K_ell(p, q) = int_0^inf J_ell(p r) v(r) J_ell(q r) r dr`` so
that ``(v' f)(p) = int K_ell(p, q) f(q) q dq``.  The kernel is discretized by
Nystrom quadrature on a resolved band ``q <= q_resolved``; above the band
momenta probe only ``r -> 0`` and ``v'`` acts as multiplication by ``v(0)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import brentq, minimize_scalar
from scipy.special import ive, jv

from .exceptions import AtEigenvalueError, DomainError, NumericalError
from .kernels import GridFunction, grid_from_edges, xi, xi_lambda
from .two_body import POLE_TOL, SpectralReport

__all__ = [
    "Potential",
    "GaussianPotential",
    "TabulatedPotential",
    "DressedVector",
    "potential_grid",
    "resolvent_r1",
    "dressed_vector",
    "denominator_terms",
    "denominator_sharp",
    "resolvent_sharp",
    "resolvent_sharp_cutoff",
    "sharp_cutoff_hamiltonian_matrix",
    "find_bound_states_sharp",
    "e0_bound",
]


class Potential:
    """Base class: subclasses provide ``__call__``, ``sup_norm``, ``constant``,
    ``value_at_origin``, ``q_resolved`` and ``_decaying_kernel``."""

    constant = 0.0

    def _decaying_kernel(self, p, q, ell):
        raise NotImplementedError

    def momentum_matrix(self, grid, ell=0):
        """Symmetric matrix of ``v'`` in the coordinates ``sqrt(2 pi q w) f``."""
        cache = self.__dict__.setdefault("_matrix_cache", {})
        key = (id(grid), ell)
        hit = cache.get(key)
        if hit is not None and hit[0] is grid:
            return hit[1]
        q = grid.nodes
        low = q <= self.q_resolved
        mat = np.diag(np.where(low, self.constant, self.value_at_origin)).astype(float)
        if np.any(low):
            s = np.sqrt(grid.weights[low] * q[low])
            K = self._decaying_kernel(q[low], q[low], ell)
            block = s[:, None] * K * s[None, :]
            idx = np.flatnonzero(low)
            mat[np.ix_(idx, idx)] += 0.5 * (block + block.T)
        cache[key] = (grid, mat)
        return mat

    def apply(self, psi):
        """``v' psi`` for a grid function."""
        s = psi.grid.sqrt_planar_weights
        out = self.momentum_matrix(psi.grid, psi.ell) @ (s * psi.values)
        return GridFunction(psi.grid, out / s, psi.ell)


@dataclass(frozen=True, eq=False)
class GaussianPotential(Potential):
    """``v(r) = constant + sum_k amplitudes[k] * exp(-r^2 / (2 widths[k]^2))``.

    The Hankel kernel of each Gaussian is closed form,
    ``exp(-(p^2+q^2)/4a) I_ell(pq/2a) / 2a`` with ``a = 1/(2 width^2)``.
    """

    amplitudes: tuple = ()
    widths: tuple = ()
    constant: float = 0.0
    band: float = 30.0

    def __post_init__(self):
        amps = tuple(float(a) for a in np.atleast_1d(self.amplitudes))
        wids = tuple(float(w) for w in np.atleast_1d(self.widths))
        if len(amps) != len(wids):
            raise DomainError("amplitudes and widths differ in length")
        if any(w <= 0 for w in wids):
            raise DomainError("widths must be positive")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "widths", wids)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.full_like(r, self.constant)
        for c, s in zip(self.amplitudes, self.widths):
            out = out + c * np.exp(-0.5 * (r / s) ** 2)
        return out

    @property
    def value_at_origin(self):
        return self.constant + sum(self.amplitudes)

    @property
    def sup_norm(self):
        cached = self.__dict__.get("_sup")
        if cached is not None:
            return cached
        vals = [abs(self.constant), abs(self.value_at_origin)]
        if self.widths:
            r = np.linspace(0.0, 8.0 * max(self.widths), 20001)
            f = np.abs(self(r))
            i = int(np.argmax(f))
            lo, hi = r[max(i - 1, 0)], r[min(i + 1, r.size - 1)]
            if hi > lo:
                res = minimize_scalar(lambda x: -abs(float(self(x))), bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-12})
                vals.append(-res.fun)
            vals.append(float(f[i]))
        out = max(vals)
        object.__setattr__(self, "_sup", out)
        return out

    @property
    def q_resolved(self):
        if not self.widths:
            return 0.0
        return self.band / min(self.widths)

    @property
    def panel_width(self):
        return 1.0 / max(self.widths) if self.widths else 1.0

    def _decaying_kernel(self, p, q, ell):
        P, Q = np.meshgrid(p, q, indexing="ij")
        out = np.zeros_like(P)
        for c, s in zip(self.amplitudes, self.widths):
            a = 0.5 / s**2
            out += c / (2 * a) * np.exp(-((P - Q) ** 2) / (4 * a)) * ive(ell, P * Q / (2 * a))
        return out

    def hankel_kernel_numeric(self, p, q, ell, nodes=4000):
        """Brute-force ``r`` quadrature of the same kernel (reference route)."""
        rmax = 12.0 * max(self.widths)
        x, w = leggauss(nodes)
        r = 0.5 * rmax * (x + 1)
        wr = 0.5 * rmax * w * r * (self(r) - self.constant)
        return (jv(ell, np.outer(p, r)) * wr) @ jv(ell, np.outer(q, r)).T


@dataclass(frozen=True, eq=False)
class TabulatedPotential(Potential):
    """Piecewise-linear ``v`` through ``(radii, values)``, constant beyond the last radius."""

    radii: np.ndarray = None
    values: np.ndarray = None
    q_resolved: float = 60.0

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise DomainError("need at least two (radius, value) samples")
        if np.any(r < 0) or np.any(np.diff(r) <= 0):
            raise DomainError("radii must be non-negative and strictly increasing")
        if not (np.all(np.isfinite(v))):
            raise DomainError("potential values must be finite")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_file(cls, path, **kwargs):
        """Read a two-column whitespace-separated ``radius value`` table."""
        try:
            with warnings.catch_warnings():
                # an empty file is reported below as too few samples
                warnings.simplefilter("ignore", UserWarning)
                data = np.loadtxt(path, ndmin=2)
        except ValueError as exc:
            raise DomainError(f"malformed potential file {path}: {exc}") from exc
        if data.size and data.shape[1] != 2:
            raise DomainError(f"potential file {path} must have exactly two columns")
        if not data.size:
            raise DomainError(f"potential file {path} holds no data")
        return cls(data[:, 0], data[:, 1], **kwargs)

    def __call__(self, r):
        return np.interp(r, self.radii, self.values)

    @property
    def constant(self):
        return float(self.values[-1])

    @property
    def value_at_origin(self):
        return float(self(0.0))

    @property
    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    @property
    def panel_width(self):
        # about three panels per oscillation period 2 pi / r_max of the kernel
        return min(1.0, math.pi / self.radii[-1]) if self.radii[-1] > 0 else 1.0

    def _decaying_kernel(self, p, q, ell):
        # u = v - v(inf) vanishes beyond the last radius; integrate panel by
        # panel with sub-panels short against the fastest oscillation
        edges = np.unique(np.concatenate([[0.0], self.radii]))
        kmax = float(np.max(p) + np.max(q))
        x, w = leggauss(10)
        out = np.zeros((p.size, q.size))
        r_chunk, w_chunk = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            n = max(1, int(math.ceil((hi - lo) * kmax / 4.0)))
            sub = np.linspace(lo, hi, n + 1)
            a, b = sub[:-1, None], sub[1:, None]
            r_chunk.append((0.5 * (b - a) * x + 0.5 * (a + b)).ravel())
            w_chunk.append((0.5 * (b - a) * w).ravel())
        r = np.concatenate(r_chunk)
        wr = np.concatenate(w_chunk) * r * (self(r) - self.constant)
        for start in range(0, r.size, 4096):
            sl = slice(start, start + 4096)
            out += (jv(ell, np.outer(p, r[sl])) * wr[sl]) @ jv(ell, np.outer(q, r[sl])).T
        return out


@dataclass(frozen=True, eq=False)
class DressedVector:
    """``Omega_{1,E} = Omega_E - R_1(E) v' Omega_E`` on a grid."""

    omega1: GridFunction
    energy: float


def potential_grid(pot, *, breakpoints=(), q_min=1e-8, q_max=1e6, order=8, tail_panels=40):
    """Grid resolving ``v'`` on its band and log-spaced beyond it."""
    Q = max(pot.q_resolved, 1.0)
    low = np.geomspace(q_min, 1.0, 12)
    mid = np.arange(1.0, Q, pot.panel_width)
    tail = np.geomspace(Q, q_max, tail_panels + 1)
    edges = np.unique(np.concatenate([low, mid, tail, [b for b in breakpoints if q_min < b < q_max]]))
    return grid_from_edges(edges, order, mapping="mixed")


def _check_below_spectrum(pot, E, margin=0.0):
    if not E < -pot.sup_norm - margin:
        raise DomainError(f"E={E!r} must lie below -||v||_inf - {margin}")


def _h1_factor(pot, E, grid, ell=0):
    cache = pot.__dict__.setdefault("_chol_cache", {})
    key = (id(grid), ell, float(E))
    hit = cache.get(key)
    if hit is not None and hit[0] is grid:
        return hit[1]
    mat = np.diag(grid.nodes**2 - E) + pot.momentum_matrix(grid, ell)
    try:
        fac = cho_factor(mat, lower=True)
    except LinAlgError as exc:
        cond = np.linalg.cond(mat)
        raise NumericalError(f"H_1 - E not positive definite at E={E!r}", condition=cond) from exc
    if len(cache) > 64:
        cache.clear()
    cache[key] = (grid, fac)
    return fac


def resolvent_r1(pot, E, psi):
    """Solve ``(p^2 + v' - E) phi = psi`` for ``E < -||v||_inf``."""
    _check_below_spectrum(pot, E)
    grid = psi.grid
    s = grid.sqrt_planar_weights
    fac = _h1_factor(pot, E, grid, psi.ell)
    rhs = s * psi.values
    sol = cho_solve(fac, rhs)
    mat = np.diag(grid.nodes**2 - E) + pot.momentum_matrix(grid, psi.ell)
    resid = np.linalg.norm(mat @ sol - rhs)
    if resid > 1e-8 * max(np.linalg.norm(rhs), 1e-300):
        raise NumericalError(f"R_1 residual {resid:.3e} too large", condition=np.linalg.cond(mat))
    return GridFunction(grid, sol / s, psi.ell)


def dressed_vector(pot, E, grid):
    omega = GridFunction(grid, 1.0 / (grid.nodes**2 - E))
    return DressedVector(omega - resolvent_r1(pot, E, pot.apply(omega)), float(E))


def denominator_terms(pot, E, grid):
    """``((Omega, v' Omega), (Omega, v' R_1 v' Omega))`` at energy ``E``.

    Defined for ``E < -||v||_inf``; the a-priori bounds ``pi`` and
    ``pi ||v||_inf`` on the two terms hold once ``E < -||v||_inf - 1``.
    """
    _check_below_spectrum(pot, E)
    omega = GridFunction(grid, 1.0 / (grid.nodes**2 - E))
    vo = pot.apply(omega)
    return omega.inner(vo), vo.inner(resolvent_r1(pot, E, vo))


def denominator_sharp(pot, mu, E, grid):
    """``xi(mu^2, -E) + (Omega, v' Omega) - (Omega, v' R_1 v' Omega)``."""
    first, second = denominator_terms(pot, E, grid)
    return xi(mu**2, -E) + first - second


def resolvent_sharp(pot, mu, E, psi):
    """Renormalized ``R#(E) psi = R_1 psi + D^-1 <Omega_1, psi> Omega_1``."""
    grid = psi.grid
    out = resolvent_r1(pot, E, psi)
    if psi.ell != 0:
        return out
    denom = denominator_sharp(pot, mu, E, grid)
    if abs(denom) < POLE_TOL:
        raise AtEigenvalueError(f"E={E!r} is an eigenvalue of H#")
    om1 = dressed_vector(pot, E, grid).omega1
    return out + (om1.inner(psi) / denom) * om1


def resolvent_sharp_cutoff(pot, model, E, psi):
    """Cutoff ``R#_lam(E) psi`` from the rank-one formula around ``R_1``.

    The denominator ``(2pi)^2/g - (rho, R_1 rho)`` is evaluated as
    ``xi_lam(mu^2, -E) + (R_0 rho, v' R_0 rho) - (R_0 rho, v' R_1 v' R_0 rho)``
    so that the divergent pieces cancel in closed form.
    """
    grid = psi.grid
    _check_below_spectrum(pot, E)
    out = resolvent_r1(pot, E, psi)
    if psi.ell != 0:
        return out
    q = grid.nodes
    r0rho = GridFunction(grid, (q <= model.lam) / (q**2 - E))
    vr = pot.apply(r0rho)
    denom = xi_lambda(model.mu**2, -E, model.lam) + r0rho.inner(vr) - vr.inner(resolvent_r1(pot, E, vr))
    if abs(denom) < POLE_TOL:
        raise AtEigenvalueError(f"E={E!r} is an eigenvalue of H#_lam")
    r1rho = r0rho - resolvent_r1(pot, E, vr)
    return out + (r1rho.inner(psi) / denom) * r1rho


def sharp_cutoff_hamiltonian_matrix(pot, model, grid):
    """Dense ``ell = 0`` matrix of ``p^2 + v' - g/(2pi)^2 |rho><rho|``."""
    q = grid.nodes
    r = grid.sqrt_planar_weights * (q <= model.lam)
    return np.diag(q**2) + pot.momentum_matrix(grid, 0) - model.g / (2 * math.pi) ** 2 * np.outer(r, r)


def e0_bound(pot, mu):
    """``max(||v|| + 1, mu^2 exp(||v|| + 1))``: ``H#`` is bounded below by ``-e0``."""
    v = pot.sup_norm
    return max(v + 1.0, mu**2 * math.exp(v + 1.0))


def find_bound_states_sharp(pot, mu, E_range, grid, *, scan_panels=64, rtol=1e-10):
    """Zeros of :func:`denominator_sharp` in ``E_range``.

    The range is scanned on ``scan_panels`` log-spaced panels in ``-E`` and
    every sign change is refined by Brent's method.  No sign change gives an
    empty report.
    """
    lo, hi = sorted(float(e) for e in E_range)
    _check_below_spectrum(pot, hi)
    t = np.linspace(math.log(-hi), math.log(-lo), scan_panels + 1)

    def f(tt):
        return denominator_sharp(pot, mu, -math.exp(tt), grid)

    vals = [f(tt) for tt in t]
    roots = []
    for a, b, fa, fb in zip(t[:-1], t[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(brentq(f, a, b, xtol=1e-15, rtol=rtol))
    if vals[-1] == 0.0:
        roots.append(t[-1])
    energies = [-math.exp(r) for r in roots]
    vectors = [dressed_vector(pot, E, grid).omega1.normalized() for E in energies]
    return SpectralReport(energies=energies, eigenvectors=vectors)
