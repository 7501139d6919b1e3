"""
Checking the assumptions
========================

A sampled check of the paracontraction inequality, a negative control
(an expansion), and the local-inclusion property of the sparse selection.
"""

import numpy as np

from paraunion import check_A3, validate_paracontraction
from paraunion.operators import ConvexProjection, Scaling
from paraunion.problems import make_sparse_affine_feasibility
from paraunion.space import Ball, WholeSpace
from paraunion.union import SparseSupport, SupportFamily, UnionOperator

C = WholeSpace(theta=np.zeros(2))

rep = validate_paracontraction(ConvexProjection(Ball(theta=np.zeros(2), radius=1.0)), C,
                               M=10.0, n_samples=1000)
print(f"projection onto a ball: passed={rep.passed}, max slack {rep.max_slack:.3f}")

rep = validate_paracontraction(Scaling(1.1, [0.0, 0.0]), C, M=10.0, n_samples=1000)
v = rep.violations[0]
print(f"x -> 1.1x: passed={rep.passed}, {len(rep.violations)} violations, "
      f"e.g. |z - Tx| = {v.dist_image:.3f} > |z - x| = {v.dist_point:.3f}")

# a generic point: phi stays inside phi(x) near x
U = make_sparse_affine_feasibility(8, 4, 2, 0).union
print("A3 at a generic point:", check_A3(U, np.arange(8.0)).passed)

# a near tie, 1.0 against 0.999: a radius-0.1 ball reaches the other support
U2 = UnionOperator(SupportFamily(2, 1, WholeSpace(theta=np.zeros(2))), SparseSupport(1, 0.0),
                   WholeSpace(theta=np.zeros(2)))
rep = check_A3(U2, [1.0, 0.999], radii=(1e-1,))
print("A3 near a tie at radius 0.1:", rep.passed, " witness:", rep.witness)
