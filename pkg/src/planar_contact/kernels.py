"""Scalar functions, the renormalized coupling and radial quadrature.

Everything here is a pure function of its arguments.  Momentum integrals
over the plane are reduced to radial ones, ``d^2p = 2*pi*q*dq`` for
rotation-invariant integrands.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .exceptions import DomainError, MixedConventionError, SingularKernelError

__all__ = [
    "Dispersion",
    "CutoffModel",
    "RadialGrid",
    "GridFunction",
    "xi_lambda",
    "xi",
    "coupling_g",
    "angular_average",
    "build_radial_grid",
    "grid_from_edges",
    "schur_bilinear_bound_check",
    "fit_loglog_slope",
    "require_same_dispersion",
]


class Dispersion(enum.Enum):
    """Kinetic-energy convention.

    ``TWO_BODY`` is the relative-coordinate problem with ``2m = 1`` so that
    ``omega(p) = p**2``; ``MANY_BODY`` uses ``m = 1``, ``omega(p) = p**2 / 2``.
    """

    TWO_BODY = "two_body"
    MANY_BODY = "many_body"

    def omega(self, p):
        p2 = np.square(p)
        return p2 if self is Dispersion.TWO_BODY else 0.5 * p2


def require_same_dispersion(*objects):
    """Raise if the ``dispersion`` attributes of ``objects`` disagree."""
    tags = {getattr(obj, "dispersion") for obj in objects}
    if len(tags) > 1:
        names = sorted(t.value for t in tags)
        raise MixedConventionError(f"mixed dispersion conventions: {names}")
    return tags.pop() if tags else None


def _positive(name, value):
    if not (value > 0):
        raise DomainError(f"{name} must be positive, got {value!r}")


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def xi_lambda(a, b, lam):
    """Finite difference of the two cutoff integrals ``int_{|p|<=lam} (p^2+a)^-1 - (p^2+b)^-1``.

    Evaluated in the divergence-free form
    ``pi * (log(1/a + 1/lam^2) - log(1/b + 1/lam^2))``.  ``lam = inf``
    returns the limit :func:`xi`.
    """
    _positive("a", a)
    _positive("b", b)
    _positive("lam", lam)
    if math.isinf(lam):
        return xi(a, b)
    inv2 = 1.0 / (lam * lam)
    return math.pi * (math.log(1.0 / a + inv2) - math.log(1.0 / b + inv2))


def xi(a, b):
    """Cutoff-free limit ``pi * log(b / a)``."""
    _positive("a", a)
    _positive("b", b)
    return math.pi * math.log(b / a)


def coupling_g(mu, lam):
    """Renormalized bare coupling ``g_lam(mu) = 4 pi / log(lam^2/mu^2 + 1)``.

    This is ``(2 pi)^2`` divided by ``int_{|p|<=lam} (p^2 + mu^2)^-1 dp``; it
    vanishes logarithmically as the cutoff is removed.
    """
    _positive("mu", mu)
    _positive("lam", lam)
    if math.isinf(lam):
        return 0.0
    return 4.0 * math.pi / math.log1p((lam / mu) ** 2)


def angular_average(A, B):
    """Return ``(1/2pi) int_0^{2pi} dtheta / (A + B cos theta) = (A^2 - B^2)^(-1/2)``.

    Works elementwise on arrays.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if np.any(A <= np.abs(B)):
        raise SingularKernelError("angular average needs A > |B|")
    # (A-B)(A+B) is better conditioned than A^2 - B^2 when A ~ |B|
    out = 1.0 / np.sqrt((A - B) * (A + B))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CutoffModel:
    """Momentum cutoff ``lam`` together with the renormalization scale ``mu``.

    ``lam = math.inf`` denotes the renormalized limit; ``g`` is then ``None``.
    """

    lam: float
    mu: float

    def __post_init__(self):
        _positive("lam", self.lam)
        _positive("mu", self.mu)

    @property
    def is_limit(self):
        return math.isinf(self.lam)

    @property
    def g(self):
        if self.is_limit:
            return None
        return coupling_g(self.mu, self.lam)

    @property
    def inverse_coupling(self):
        """``(2 pi)^2 / g = pi log(lam^2/mu^2 + 1)``, the disc integral of ``(p^2+mu^2)^-1``."""
        if self.is_limit:
            return math.inf
        return math.pi * math.log1p((self.lam / self.mu) ** 2)

    def with_lambda(self, lam):
        return CutoffModel(lam=lam, mu=self.mu)


# ---------------------------------------------------------------------------
# radial quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Composite Gauss-Legendre rule on ``[q_min, q_max]``.

    ``weights`` integrate in ``dq``; :attr:`planar_weights` carry the plane
    measure ``2 pi q dq`` and are what inner products of rotation-invariant
    (or single angular harmonic) functions use.
    """

    nodes: np.ndarray
    weights: np.ndarray
    q_min: float
    q_max: float
    mapping: str = "log"
    edges: np.ndarray = field(default=None, repr=False)
    tolerance: float = 1e-12

    def __len__(self):
        return self.nodes.size

    @property
    def planar_weights(self):
        return 2.0 * np.pi * self.nodes * self.weights

    @property
    def sqrt_planar_weights(self):
        return np.sqrt(self.planar_weights)

    def integrate(self, values):
        """``sum_i w_i f_i`` (line measure)."""
        return float(np.dot(self.weights, values))

    def integrate_planar(self, values):
        """``sum_i 2 pi q_i w_i f_i`` (plane measure, radial integrand)."""
        return float(np.dot(self.planar_weights, values))

    def scaled(self, factor):
        """Grid for momenta multiplied by ``factor``."""
        _positive("factor", factor)
        return RadialGrid(
            nodes=self.nodes * factor,
            weights=self.weights * factor,
            q_min=self.q_min * factor,
            q_max=self.q_max * factor,
            mapping=self.mapping,
            edges=None if self.edges is None else self.edges * factor,
            tolerance=self.tolerance,
        )


def build_radial_grid(q_min, q_max, panels, order, *, mapping="log", breakpoints=()):
    """Composite Gauss-Legendre nodes on ``panels`` panels of ``order`` points.

    Panels are log-spaced (``mapping="log"``) or uniform (``"linear"``).
    Each value in ``breakpoints`` strictly inside the domain becomes an
    extra panel edge; put discontinuities of the integrand (sharp cutoffs)
    there.
    """
    if not (0 < q_min < q_max) or not math.isfinite(q_max):
        raise DomainError(f"need 0 < q_min < q_max < inf, got ({q_min}, {q_max})")
    if int(panels) < 1 or int(order) < 1:
        raise DomainError("panels and order must be >= 1")
    if mapping == "log":
        edges = np.geomspace(q_min, q_max, int(panels) + 1)
    elif mapping == "linear":
        edges = np.linspace(q_min, q_max, int(panels) + 1)
    else:
        raise DomainError(f"unknown mapping {mapping!r}")
    extra = [float(b) for b in breakpoints if q_min < b < q_max]
    if extra:
        edges = np.unique(np.concatenate([edges, extra]))
    edges[0], edges[-1] = q_min, q_max
    return grid_from_edges(edges, order, mapping=mapping)


def grid_from_edges(edges, order, *, mapping="custom"):
    """Gauss-Legendre rule of ``order`` points on every panel between ``edges``."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or edges[0] <= 0 or np.any(np.diff(edges) <= 0):
        raise DomainError("edges must be positive and strictly increasing")
    x, w = leggauss(int(order))
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (half * x + 0.5 * (hi + lo)).ravel()
    weights = (half * w).ravel()
    q_min, q_max = float(edges[0]), float(edges[-1])

    # self-check on int q dq / (q^2 + 1) over the grid's own domain
    approx = np.dot(weights, nodes / (nodes**2 + 1.0))
    exact = 0.5 * math.log((q_max**2 + 1.0) / (q_min**2 + 1.0))
    tol = max(10.0 * abs(approx - exact) / abs(exact), 1e-13)
    return RadialGrid(nodes, weights, q_min, q_max, mapping, edges, tol)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples ``f(q_i)`` of ``psi(p) = f(|p|) exp(i*ell*theta)`` on a radial grid."""

    grid: RadialGrid
    values: np.ndarray
    ell: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise DomainError("values must match the grid nodes")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid, func, ell=0):
        return cls(grid, func(grid.nodes), ell)

    def _check(self, other):
        if other.grid is not self.grid:
            raise DomainError("grid functions live on different grids")

    def inner(self, other):
        """L^2(R^2) inner product; distinct harmonics are orthogonal."""
        self._check(other)
        if self.ell != other.ell:
            return 0.0
        return self.grid.integrate_planar(self.values * other.values)

    def norm(self):
        return math.sqrt(max(self.inner(self), 0.0))

    def normalized(self):
        return self * (1.0 / self.norm())

    def _combine(self, other, sign):
        self._check(other)
        if self.ell != other.ell:
            raise DomainError("cannot add different angular harmonics")
        return GridFunction(self.grid, self.values + sign * other.values, self.ell)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar):
        return GridFunction(self.grid, self.values * float(scalar), self.ell)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def schur_bilinear_bound_check(grid, h, hprime, c):
    """Compare ``|<h, (p^2 + q^2 + c)^-1 h'>|`` with ``pi^2 ||h|| ||h'||``.

    ``h`` and ``hprime`` are rotation-invariant functions on the plane given
    by their radial samples on ``grid``.  Returns ``(lhs, rhs)``.
    """
    _positive("c", c)
    h = np.asarray(getattr(h, "values", h), dtype=float)
    hp = np.asarray(getattr(hprime, "values", hprime), dtype=float)
    q, W = grid.nodes, grid.planar_weights
    kernel = 1.0 / (q[:, None] ** 2 + q[None, :] ** 2 + c)
    lhs = abs(float((W * h) @ kernel @ (W * hp)))
    rhs = math.pi**2 * math.sqrt(np.dot(W, h * h)) * math.sqrt(np.dot(W, hp * hp))
    return lhs, rhs


def fit_loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)
