"""Geodesics on parametric surfaces and direct methods for 1-D variational problems.

The numerical core (surface metric and the adaptive geodesic integrator)
runs in a compiled extension when it is available and in generated pure
Python otherwise; ``BACKEND`` names the one in use.
"""
__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .analytic import AnalyticGeodesic, cylinder_helix, great_circle, plane_line  # noqa: E402
from .errors import (ConvergenceError, DomainError, IntegrationError,  # noqa: E402
                     QuadratureError, SingularPointError, TurningPointError)
from .expr import Expr, ExprDomainError, ExprError, ExprSyntaxError, eval_jet, parse_expr  # noqa: E402
from .geodesic import (GeodesicCurve, GeodesicState, connect_geodesic,  # noqa: E402
                       el_residual_geodesic, geodesic_rhs, integrate_geodesic, speed)
from .jet import Jet2  # noqa: E402
from .revolution import (QuadratureResult, geodesic_quadrature_u,  # noqa: E402
                         geodesic_quadrature_v, geodesic_revolution, vprime_from_first_integral)
from .surface import (FundamentalForm, Interval, SurfaceSpec, eval_point,  # noqa: E402
                      fundamental_form, parse_surface, regularity_check, resolve_surface)
from .variational import (DiscreteCurve, FunctionalSpec, direct_minimize,  # noqa: E402
                          el_residual_1d, functional_eval, norm_c0, norm_d1, norm_dn)

__all__ = [
    "BACKEND", "AnalyticGeodesic", "cylinder_helix", "great_circle", "plane_line",
    "ConvergenceError", "DomainError", "IntegrationError", "QuadratureError",
    "SingularPointError", "TurningPointError", "Expr", "ExprDomainError", "ExprError",
    "ExprSyntaxError", "eval_jet", "parse_expr", "GeodesicCurve", "GeodesicState",
    "connect_geodesic", "el_residual_geodesic", "geodesic_rhs", "integrate_geodesic", "speed",
    "Jet2", "QuadratureResult", "geodesic_quadrature_u", "geodesic_quadrature_v",
    "geodesic_revolution", "vprime_from_first_integral", "FundamentalForm", "Interval",
    "SurfaceSpec", "eval_point", "fundamental_form", "parse_surface", "regularity_check",
    "resolve_surface", "DiscreteCurve", "FunctionalSpec", "direct_minimize", "el_residual_1d",
    "functional_eval", "norm_c0", "norm_d1", "norm_dn",
]
