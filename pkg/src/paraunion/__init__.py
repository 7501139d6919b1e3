"""Fixed-point and Krasnosel'skii-Mann iterations for unions of
paracontracting operators, with run-time certificates."""
from .space import (Ball, Box, AffineSubspace, HalfspaceIntersection, WholeSpace,
                    ball_contains, distance, halfspace, project_onto_set)
from .operators import (TOL_FIX, AveragedComposition, ConvexProjection, Scaling,
                        SubspaceProjection, evaluate, find_fixed_point,
                        fixed_points_hint, strict_contraction,
                        validate_paracontraction)
from .union import (ConstantFull, NearestOperators, OperatorList, SelectionPolicy,
                    SparseSupport, SupportFamily, UnionOperator, apply_union,
                    check_A3, choose_next, select_indices)
from .engine import (IterationConfig, LambdaSchedule, read_trace, residual_identity_check,
                     run_km, run_plain, write_trace)
from .analysis import (certify_run, detect_stabilization, estimate_delta,
                       format_certificate, q_bound)
from .problems import (make_box_ball, make_convex_feasibility,
                       make_sparse_affine_feasibility, make_toy_1d,
                       random_halfspaces_through)

__version__ = "0.1.0"
