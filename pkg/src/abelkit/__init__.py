"""Symbolic and numerical toolkit for Abel equations of the first and second
kind, Riccati equations, the D = d/dt + x^2 hierarchy, Darboux polynomials,
Jacobi multipliers and the Lagrangians they produce."""

from .abel_model import (
    AbelFirstKind,
    AbelSecondKind,
    Classification,
    Gauge,
    LiouvilleInvariants,
    canonical_form,
    canonical_shift,
    classify,
    gauge_compose,
    gauge_invert,
    gauge_transform,
    lienard_to_abel,
    liouville_invariants,
    second_to_first,
    solve_bernoulli,
    solve_linear,
    solve_separable,
)
from .config import SETTINGS
from .darboux_jm import (
    DarbouxPair,
    MultiplierProduct,
    PlanarVF,
    apply_vf,
    build_multiplier,
    divergence,
    find_darboux_vlinear,
    is_darboux_pair,
    jm_exponents,
    jm_residual,
)
from .errors import *  # noqa: F401,F403
from .expr import expr_equal_numeric, parse, parse_phase, unparse
from .hierarchy import abel_operator, build_hierarchy_equation, to_planar_vf
from .inverse_lagrangian import (
    PowerForm,
    energy,
    euler_lagrange_residual,
    helmholtz_residual_1d,
    lagrangian_from_multiplier,
)
from .lie_structure import (
    INF,
    Mobius,
    VSpan,
    bracket_1d,
    check_two_dim_subalgebra,
    in_span,
    mobius_apply,
    normalizer_in_degree,
    riccati_superposition,
    sl2_coefficient_action,
)
from .numerics import Trajectory, integrate_ode, quad_adaptive, root_bracketed
from .poly import JetPoly, Poly, PolyVF1D, xy

__version__ = "0.1.0"
