"""
Halving on the line
===================

The single map x -> x/2 with fixed point 0. Everything about this run can be
checked by hand, which makes it a good first look at traces and certificates.
"""

import numpy as np

from paraunion import certify_run, estimate_delta, format_certificate, q_bound, run_plain
from paraunion.problems import make_toy_1d

toy = make_toy_1d("halving")

# iterate from 8: the residuals are 4, 2, 1, 1/2, ...
r = run_plain(toy.union, [8.0])
print("first iterates:", [float(rec.x[0]) for rec in r.trace[:6]])
print("termination:", r.termination, "after", len(r.steps), "steps")

# steps longer than eps = 1 are the first two; each cuts the distance to 0 by
# at least 2, and 2 * 2 <= |8 - 0|
cert = certify_run(r, toy.union, toy.z_star, epsilon_levels=(1.0, 0.5, 0.1))
print(format_certificate(cert))

# the a-priori side: sample the uniform decrease on a grid over [-4, 4]
grid = np.linspace(-4, 4, 100_001)
est = estimate_delta(toy.union, toy.z_star, epsilon=1.0, M=4.0, points=grid)
print("delta_hat:", est.delta_hat)
print("Q plain:", q_bound(4.0, est.delta_hat), " Q km (kappa=0.25):",
      q_bound(4.0, est.delta_hat, "km", 0.25))
