"""Attractive points, quasinonexpansive extensions and Cesàro means in R^d."""

from .attractive_set import (AttractiveApprox, FixedSetApprox, attractive_halfspace,
                             build_attractive_approx, check_projected_attractive_fixed,
                             check_projection_identity, default_approx, find_fixed_points,
                             project_attractive)
from .ergodic import (CesaroTrace, ConvergenceReport, analyze, cluster_attractiveness,
                      iterate)
from .extension import (ExtendedMapping, extend, verify_extension_fixed_set,
                        verify_extension_quasinonexpansive)
from .hilbert import (AffineSet, Ball, Box, ConvexSet, Halfspace, Intersection,
                      ProjectionResult, Singleton, WholeSpace, brute_force_project,
                      dykstra_project, inner, project)
from .mappings import (CATALOG, Mapping, ResidualReport, attractive_residual, is_fixed_point,
                       lambda_hybrid_equiv_residual, lambda_hybrid_residual, make_mapping,
                       quasinonexpansive_residual, sample_schedule)
