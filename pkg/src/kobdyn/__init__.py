"""Iteration theory of holomorphic self-maps of strongly convex domains.

Submodules: ``geometry`` (domains, Kobayashi distance, geodesics,
horospheres), ``holomap`` (self-maps and preimages), ``dynamics``
(classification, dilation coefficients, Julia checks), ``backward``
(backward orbits and their verification), ``harness`` (configs and runs).
"""

from .errors import (BoundedStepError, ClassificationError, ConfigError, ContradictionError, DomainError,
                     EstimationError, IsolationViolation, KobdynError, NoPreimageError, SelfMapViolation,
                     UnsupportedOperation)
from .geometry import (Domain, distance, general_domain, geodesic_between, geodesic_through, horofunction,
                       kregion_gauge, lempert_numeric, linear_image, poincare_dist, unit_ball, unit_disk,
                       weighted_ellipsoid)
from .holomap import (BallMobiusAxis, Compose, DiskBlaschkeQuad, DiskMobius, DiskParabolic, HolMap, Scale,
                      Unitary, UserAnalytic, identity, map_from_spec)
from .dynamics import classify, contraction_constant, dilation_coefficient, is_boundary_fixed_point, julia_check
from .backward import (backward_orbit, construct_backward_orbit_at, inequality_battery,
                       limsup_step_fixedpoint_check, step_limit_check, theorem01_suite)

__version__ = "0.1.0"
