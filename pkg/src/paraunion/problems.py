"""Benchmark instances: sparse affine feasibility, convex feasibility by
projections, and one-dimensional toys with analytic answers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import TOL_FIX, ConvexProjection, Scaling
from .space import (AffineSubspace, Ball, Box, WholeSpace, as_point, halfspace,
                    sample_ball)
from .union import (ConstantFull, NearestOperators, OperatorList, SparseSupport,
                    SupportFamily, UnionOperator)


__all__ = [
    "ProblemInstance", "make_sparse_affine_feasibility", "make_convex_feasibility",
    "random_halfspaces_through", "make_box_ball", "make_toy_1d",
]


@dataclass
class ProblemInstance:
    """A union operator with starting points and, when known, a reference
    fixed point.

    `z_scope` says how z_star is fixed: 'common' means by every operator of
    the family, 'selected' means by every operator phi selects at z_star.
    Sparse instances are only 'selected': branches for other supports have
    different fixed sets, so no point is fixed by the whole family.
    """

    name: str
    dim: int
    union: UnionOperator
    x0s: list
    z_star: np.ndarray = None
    z_scope: str = None
    metadata: dict = field(default_factory=dict)

    def check_z_star(self, tol=TOL_FIX):
        if self.z_star is None:
            return True
        if self.z_scope == "common":
            return self.union.is_strong_fixed_point(self.z_star, tol)
        return self.union.is_selected_fixed_point(self.z_star, tol)


def _random_unit_rows(rng, k, n):
    A = rng.standard_normal((k, n))
    return A / np.linalg.norm(A, axis=1, keepdims=True)


def make_sparse_affine_feasibility(n, k, s, seed, tau=1e-12,
                                   x0_radii=(0.01, 0.05, 0.1), magnitude=(1.0, 2.0),
                                   min_singular=0.1):
    """Find x with A x = b and at most s nonzeros.

    Plants x_bar with exactly s nonzeros of magnitude in `magnitude`, draws a
    k x n matrix with unit-norm rows and sets b = A x_bar. The family is
    T_J = P_{Ax=b} o P_J over all supports J of size s with the sparse-support
    selection. Starting points: x_bar itself, then one point at each radius in
    `x0_radii` around x_bar.

    Draws are repeated (seed, seed + 1, ...) until A has full row rank and the
    columns on the planted support have smallest singular value at least
    `min_singular`. Near-singular supports make the affine set and the support
    subspace meet at a tiny angle, and alternating projections then crawl.
    """
    if not (1 <= s < n and 1 <= k < n):
        raise ValueError("need 1 <= s < n and 1 <= k < n")
    for attempt in range(100):
        rng = np.random.default_rng(seed + attempt)
        A = _random_unit_rows(rng, k, n)
        support = np.sort(rng.choice(n, size=s, replace=False))
        if (np.linalg.matrix_rank(A) == k
                and np.linalg.svd(A[:, support], compute_uv=False).min() >= min_singular):
            break
    else:
        raise RuntimeError("could not draw a well-conditioned matrix in 100 attempts")
    x_bar = np.zeros(n)
    x_bar[support] = rng.uniform(*magnitude, size=s) * rng.choice([-1.0, 1.0], size=s)
    b = A @ x_bar
    outer = AffineSubspace(theta=x_bar, A=A, b=b)
    C = WholeSpace(theta=np.zeros(n))
    U = UnionOperator(SupportFamily(n, s, outer), SparseSupport(s, tau), C)
    x0s = [x_bar.copy()]
    for r in x0_radii:
        d = rng.standard_normal(n)
        x0s.append(x_bar + r * d / np.linalg.norm(d))
    return ProblemInstance(f"sparse-affine-n{n}-k{k}-s{s}-seed{seed}", n, U, x0s,
                           x_bar, "selected",
                           {"A": A, "b": b, "s": s, "k": k, "support": tuple(int(j) for j in support),
                            "seed": seed, "attempts": attempt + 1})


def make_convex_feasibility(sets, selection="constant-full", z_star=None, x0s=(),
                            theta=None, name="convex-feasibility", tau=1e-12):
    """Projections onto each set in `sets`, united under the given selection.

    `z_star` must lie in every set; it becomes the common fixed point.
    """
    sets = list(sets)
    if not sets:
        raise ValueError("need at least one set")
    n = sets[0].dim
    ops = [ConvexProjection(S) for S in sets]
    phi = {"constant-full": ConstantFull(),
           "nearest-operators": NearestOperators(tau)}[selection]
    C = WholeSpace(theta=np.zeros(n) if theta is None else theta)
    U = UnionOperator(OperatorList(ops), phi, C)
    z = None if z_star is None else as_point(z_star, n)
    inst = ProblemInstance(name, n, U, [as_point(x, n) for x in x0s], z, "common",
                           {"sets": [S.to_dict() for S in sets], "selection": selection})
    if z is not None and not inst.check_z_star():
        raise ValueError("z_star is not a common point of the sets")
    return inst


def random_halfspaces_through(point, count, seed, x0_count=3, x0_radius=5.0,
                              selection="constant-full", max_opposition=0.8):
    """`count` random halfspaces whose boundaries pass through `point`.

    Normals are redrawn until no two have cosine below -`max_opposition`;
    nearly opposite normals leave a thin wedge in which projections crawl.
    """
    point = as_point(point)
    n = point.shape[0]
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        normals = _random_unit_rows(rng, count, n)
        cos = normals @ normals.T
        if cos.min() >= -max_opposition:
            break
    else:
        raise RuntimeError("could not draw well-spread halfspace normals")
    theta = np.zeros(n)
    sets = [halfspace(a, a @ point, point) for a in normals]
    x0s = sample_ball(point, x0_radius, x0_count, rng)
    return make_convex_feasibility(sets, selection, point, x0s, theta,
                                   name=f"halfspaces-n{n}-m{count}-seed{seed}")


def make_box_ball(center, half_width, radius, seed, x0_count=3, x0_radius=4.0,
                  selection="constant-full"):
    """A box and a ball sharing `center`; the center is the common point."""
    center = as_point(center)
    n = center.shape[0]
    box = Box(theta=center, lower=center - half_width, upper=center + half_width)
    ball = Ball(theta=center, center=center, radius=radius)
    rng = np.random.default_rng(seed)
    x0s = sample_ball(center, x0_radius, x0_count, rng)
    return make_convex_feasibility([box, ball], selection, center, x0s,
                                   name=f"box-ball-n{n}-seed{seed}")


def make_toy_1d(kind="halving", x0=8.0):
    """'halving': the single map x -> x/2 with fixed point 0.
    'two-branch': {x -> x/2, x -> (x + 1)/2} under nearest-operators; the two
    branches fix 0 and 1 respectively, so there is no common fixed point."""
    C = WholeSpace(theta=np.zeros(1))
    if kind == "halving":
        U = UnionOperator(OperatorList([Scaling(0.5, [0.0])]), ConstantFull(), C)
        return ProblemInstance("toy-halving", 1, U, [np.array([float(x0)])],
                               np.zeros(1), "common", {"kind": kind})
    if kind == "two-branch":
        ops = [Scaling(0.5, [0.0]), Scaling(0.5, [1.0])]
        U = UnionOperator(OperatorList(ops), NearestOperators(), C)
        return ProblemInstance("toy-two-branch", 1, U, [np.array([float(x0)])],
                               None, None, {"kind": kind})
    raise ValueError(f"unknown toy kind {kind!r}")
