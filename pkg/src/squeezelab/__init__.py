"""Invariant metrics and uniform-squeezing certificates on bounded domains in C^n."""

from .domains import (Domain, GeometryError, ModelKind, ball, boundary_distance,
                      contains, disc, ellipsoid, estimate_volume, generic_domain,
                      interior_anchor, nearest_boundary_point, polydisc,
                      sample_boundary, sample_interior)
from .mappings import (AffineMap, BallMobius, BiholoMap, Composition, DiscMobius,
                       MapKind, PolydiscMobius, SqueezingCertificate, ball_mobius,
                       certificate_violations, convex_squeeze_map, disc_mobius,
                       jacobian_det, squeezing_map)
from .bergman import (GramMatrix, KernelEvaluator, MonomialBasis, bergman_curvature_1d,
                      bergman_metric, bergman_metric_matrix, boundary_growth,
                      build_evaluator, gram_matrix, kernel, kernel_center_bounds_check,
                      kernel_diag, load_evaluator, orthonormalize, save_evaluator,
                      unit_ball_volume)
from .finsler import (DiskAnsatz, FunctionalAnsatz, bracket, caratheodory_lower,
                      kobayashi_model, kobayashi_upper)
from .ke import (KEModelMetric, einstein_residual, exhaustion_floor,
                 hyperconvex_exhaustion, ke_for_domain, ke_metric, ke_metric_matrix,
                 ke_volume_density, levi_form_fd, levi_min_eig, ricci_fd)
from .config import ConfigError, compile_rho, load_domain, parse_domain

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
