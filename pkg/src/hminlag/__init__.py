"""Numerical construction and verification of warped-product Legendrian
immersions in spheres and anti-De Sitter spaces, their Hopf projections to
complex projective / hyperbolic space, and their cones."""

from . import ambient, geoverify, immersion_factory, legendre_curves
from .ambient import (
    Signature,
    SignatureKind,
    ads_signature,
    herm,
    kaehler,
    liouville,
    complex_volume,
    projective_separation,
    QuadricPoint,
    sphere_signature,
)
from .legendre_curves import (
    CurveSpec,
    CurveTrajectory,
    PeriodReport,
    alpha_rho,
    alpha_rho_mu,
    closedness_report,
    detect_period,
    gamma_delta,
    gamma_delta_mu,
    delta_minimal,
    integrate,
    legendre_angle,
    ode_rhs,
    rational_certificate,
    rotation_numbers,
    theta_quadrature,
)
from .immersion_factory import (
    GeometricImmersion,
    LegendrianBlock,
    QuotientAction,
    build_from_config,
    cone,
    geodesic_hyperbolic_block,
    geodesic_sphere_block,
    minimal_embedding_cor10,
    phi_delta,
    point_block,
    product_immersion,
    projected_phi_delta,
    projected_phi_rho,
    quotient_action,
)
from .geoverify import (
    VerificationReport,
    embedding_check,
    projected_periodicity,
    run_suite,
)

__version__ = "0.1.0"
