"""
Sparse affine feasibility
=========================

Find x with A x = b and at most s nonzeros. Each branch projects onto a
coordinate subspace and then onto {A x = b}. The selection keeps the best
s-term supports of the current point. Started near the planted solution,
the selected support locks in and the run stabilizes.
"""

import numpy as np

from paraunion import detect_stabilization, run_plain
from paraunion.problems import make_sparse_affine_feasibility

inst = make_sparse_affine_feasibility(n=10, k=5, s=3, seed=4)
U = inst.union
A, b = inst.metadata["A"], inst.metadata["b"]
print("planted support:", inst.metadata["support"])

r = run_plain(U, inst.x0s[-1])   # 0.1 away from the planted solution
x = r.x_final
print(f"{r.termination} after {len(r.steps)} steps, |Ax - b| = {np.linalg.norm(A @ x - b):.1e}")
print("support of the limit:", tuple(np.flatnonzero(np.abs(x) > 1e-8).tolist()))

st = detect_stabilization(r, U)
print("stabilized:", st.stabilized, " t0:", st.t0)
print("phi(x*):", st.phi_star, " fixing:", st.fixing, " not fixing:", st.non_fixing)

# no point is fixed by every branch: other supports move the solution
print("planted solution fixed by all 120 branches:", U.is_strong_fixed_point(inst.z_star))
