"""Critical-points-at-infinity census for prescribed Webster curvature on the CR sphere S^3."""

__version__ = "0.1.0"

from .errors import (CensusError, ConditionCViolation, ConfigError, ConvergenceError,  # noqa: E402
                     DegenerateProfile, DomainError, InternalInconsistency, MarginalCase,
                     NumericalInconsistency, PoleError, RegimeError, SingularityError)
from .heisenberg import (BubbleParams, HeisenbergPoint, SpherePoint, bubble_w,  # noqa: E402
                         c0_squared, cayley_forward, cayley_inverse, cr_distance_sq, dilate,
                         group_mul, koranyi_norm, sphere_bubble, sublaplacian_fd)
from .quadrature import (IntegralSpec, QuadratureResult, StructuralConstants,  # noqa: E402
                         compute_kappa, compute_kappa_prime, compute_structural_constants,
                         dk_integrals, integrate_h1, integrate_sphere, monte_carlo_oracle)
from .critical import (Classification, CriticalPointProfile, PointSet,  # noqa: E402
                       classify_point, local_field_eval, validate_profile)
from .interaction import (GreenKernelConfig, InteractionMatrix, assemble_matrix,  # noqa: E402
                          green_kernel, is_positive_definite, least_eigenvalue)
from .counting import (CriticalAtInfinity, enumerate_k1_plus, full_criterion,  # noqa: E402
                       indices_at_infinity, multiplicity_bound, theorem1_gate)
