"""Map projections, least-distortion conformal maps and Chebyshev nets."""
from .distortion import (
    DistortionReport,
    DistortionSample,
    classify_euler,
    distortion_report,
    local_scales,
    magnification,
    magnification_conformal,
    tissot,
)
from .errors import *  # noqa: F401,F403
from .geo import (
    GeoPoint,
    PlanePoint,
    Region,
    geodesic_cap,
    latlon_quadrangle,
    mercator_forward,
    mercator_inverse,
    resample_boundary,
    sphere_circle_intersect,
)
from .laplace import GridDomain, ScalarField, build_grid, harmonic_conjugate, integrate_holomorphic, solve_dirichlet
from .nets import ChebNet, build_net, darboux_net, edge_length_check, net_angle, net_angles, sine_gordon_residual
from .optimal import ConicFit, OptimizedProjection, fit_conic_exponent, optimize_projection
from .projections import KINDS, ProjectionMap, great_circle_image_check, make_projection, project

__version__ = "0.1.0"
