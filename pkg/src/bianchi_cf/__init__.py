"""Nearest-integer complex continued fractions over the Euclidean imaginary
quadratic rings, their maximal digits and the cusp excursions of the
associated geodesics in hyperbolic 3-space."""

__version__ = "0.1.0"

from .ring import EUCLIDEAN_D, Discriminant, FieldElement, RingElement, as_disc, embed, nearest_lattice_point
from .cfrac import (
    ExactOrbit,
    Expansion,
    PrecisionLoss,
    TerminatedExpansion,
    determinant_identity,
    evaluate,
    expand,
    gauss_step,
    in_cell,
    reversed_quotient,
)
from .hyperbolic import (
    INF,
    GeodesicLift,
    H3Point,
    MobiusMap,
    act,
    act_boundary,
    distance,
    hemisphere_intersection,
    p_matrix,
    reduce_to_domain,
)
from .excursion import ExcursionTrace, cstar_estimate, exact_trace, fast_trace, growth_subsequence
from .evt import (
    cstar_experiment,
    estimate_tail_constant,
    frechet_fit,
    galambos_baseline,
    max_digit_experiment,
    poisson_k_fit,
    scale_from_tail,
    theorem2_experiment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
