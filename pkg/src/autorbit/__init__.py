"""Numerical automorphic-group orbits of entire functions and their identities."""

__version__ = "0.1.0"

from .functions import (
    CompositionTower,
    CosSqrt,
    EntireFunction,
    Exp,
    GeneralPolynomial,
    Monomial,
    NgFactor,
    PolyTimesExp,
    QuadraticZZ,
    QuarterOrder,
    TruncatedSeries,
    build_function,
    estimate_order,
    eval_kderiv,
    modulus_extrema,
    partial_sum,
)
from .contour import ContourConfig, QuadratureResult, circle_integral, safe_radius
from .orbit import (
    CountingProfile,
    MomentVector,
    OrbitSample,
    WimanRadii,
    counting_profile,
    critical_points,
    derivative_orbit,
    moments_to_points,
    orbit,
    orbit_count,
    orbit_moments,
    wiman_search,
)
from .identities import (
    IdentityReport,
    QLambda,
    compute_shift_T_exp,
    exp_g_closed,
    folner_ratios,
    path_length,
    reconstruct_low_order,
    verify_circular_density,
    verify_cycle_chain,
    verify_derivative_sums,
    verify_exp_g_closed_form,
    verify_fiber_stability,
    verify_fixed_points,
    verify_jensen,
    verify_negative_moment_g,
    verify_orbit_nesting,
    verify_poly_vieta,
    verify_reconstruction_partial_sums,
    verify_vanishing_sums,
    verify_vieta_coefficients,
)
