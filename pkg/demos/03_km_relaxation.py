"""
Krasnosel'skii-Mann relaxation
==============================

The same union, now relaxed: x_{t+1} = (1 - lam) x_t + lam T_s(x_t) with
lam drawn in (kappa, 1 - kappa). Each recorded step can be recomputed from the
trace.
"""

import numpy as np

from paraunion import (IterationConfig, LambdaSchedule, SelectionPolicy,
                       residual_identity_check, run_km)
from paraunion.engine import trace_to_csv
from paraunion.operators import Scaling
from paraunion.space import WholeSpace
from paraunion.union import ConstantFull, UnionOperator

# KM on the zero map with lam = 1/2 halves the point each step
U0 = UnionOperator([Scaling(0.0, [0.0])], ConstantFull(), WholeSpace(theta=[0.0]))
cfg = IterationConfig(mode="km", kappa=0.25, lambda_schedule=LambdaSchedule("constant", 0.5),
                      max_iter=4)
print("zero map, lam=1/2:", [float(rec.x[0]) for rec in run_km(U0, [8.0], cfg).trace])

# two coordinate projections with random lam in (0.1, 0.9)
from paraunion.operators import SubspaceProjection
U = UnionOperator([SubspaceProjection((0,), 2), SubspaceProjection((1,), 2)],
                  ConstantFull(), WholeSpace(theta=np.zeros(2)))
cfg = IterationConfig(mode="km", kappa=0.1,
                      lambda_schedule=LambdaSchedule("seeded-uniform", seed=7),
                      policy=SelectionPolicy("seeded-random", 7))
r = run_km(U, [3.0, 2.0], cfg, z_star=[0.0, 0.0])
chk = residual_identity_check(r, U)
print(f"{len(r.steps)} KM steps, identity holds: {chk.passed}, max error {chk.max_error:.1e}")

# the first lines of the trace file
print("\n".join(trace_to_csv(r).splitlines()[2:6]))
