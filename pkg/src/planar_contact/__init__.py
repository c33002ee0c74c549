"""Renormalized point interactions in two dimensions.

Two-body cutoff and limit resolvents, a bounded-potential extension, a
truncated Fock-space laboratory for the pair-creation ("angel") algebra and
a continuum solver for three-boson bound states.
"""

from .exceptions import (
    AtEigenvalueError,
    BracketError,
    DomainError,
    GridDesignError,
    InsufficientDataError,
    MixedConventionError,
    NumericalError,
    PlanarContactError,
    PoleError,
    SingularKernelError,
)
from .kernels import (
    CutoffModel,
    Dispersion,
    GridFunction,
    RadialGrid,
    angular_average,
    build_radial_grid,
    coupling_g,
    xi,
    xi_lambda,
)
from .two_body import (
    RankOneResolvent,
    SpectralReport,
    bound_state,
    convergence_report,
    resolvent_cutoff,
    resolvent_exact,
)
from .two_body_potential import GaussianPotential, TabulatedPotential, e0_bound, find_bound_states_sharp
from .fock import FockGrid, SectorOperator
from .stm_three_body import StmOperator, TrimerResult, find_trimer_energies, scaled_operator_w

__version__ = "0.1.0"

__all__ = [
    "AtEigenvalueError", "BracketError", "DomainError", "GridDesignError", "InsufficientDataError",
    "MixedConventionError", "NumericalError", "PlanarContactError", "PoleError", "SingularKernelError",
    "CutoffModel", "Dispersion", "GridFunction", "RadialGrid", "angular_average", "build_radial_grid",
    "coupling_g", "xi", "xi_lambda",
    "RankOneResolvent", "SpectralReport", "bound_state", "convergence_report", "resolvent_cutoff",
    "resolvent_exact",
    "GaussianPotential", "TabulatedPotential", "e0_bound", "find_bound_states_sharp",
    "FockGrid", "SectorOperator",
    "StmOperator", "TrimerResult", "find_trimer_energies", "scaled_operator_w",
]
