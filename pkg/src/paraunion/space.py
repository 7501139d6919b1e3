"""Ambient-space primitives: points in R^n, the Euclidean metric, closed balls
and the closed convex constraint sets C carrying the base point theta.

Every constraint set here has a closed-form (or finite enumerative) metric
projection, so its intersection with any closed ball is compact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np


__all__ = [
    "as_point", "distance", "ball_contains", "ConstraintSet", "WholeSpace",
    "Box", "Ball", "AffineSubspace", "HalfspaceIntersection", "halfspace",
    "project_onto_set", "sample_ball", "sample_set", "grid_points",
]

# membership slack, scaled by the magnitude of the data involved
_MEMBER_TOL = 1e-10
_MAX_HALFSPACES = 12


def as_point(x, dim=None):
    """Convert `x` to a 1-D float array, checking finiteness and dimension."""
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1:
        raise ValueError(f"a point must be a 1-D vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite coordinates")
    if dim is not None and p.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {p.shape[0]}")
    return p


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def distance(x, y):
    """Euclidean distance ||x - y||_2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.linalg.norm(x - y))


def ball_contains(center, radius, x):
    """Membership in the closed ball B(center, radius); the boundary is inside."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    return distance(center, x) <= radius


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Base class for closed convex sets C in R^n with base point theta."""

    theta: np.ndarray

    kind = "abstract"
    is_convex = True

    def __post_init__(self):
        object.__setattr__(self, "theta", _frozen(as_point(self.theta)))

    @property
    def dim(self):
        return self.theta.shape[0]

    def project(self, x):
        raise NotImplementedError

    def project_rows(self, X):
        """Project each row of X; subclasses vectorize where it is cheap."""
        return np.array([self.project(x) for x in X]).reshape(X.shape)

    def contains(self, x, tol=_MEMBER_TOL):
        x = as_point(x, self.dim)
        return distance(self.project(x), x) <= tol * (1.0 + np.linalg.norm(x))

    def contains_rows(self, X, tol=_MEMBER_TOL):
        """Boolean mask of the rows of X that lie in the set."""
        X = np.asarray(X, dtype=float)
        gap = np.linalg.norm(self.project_rows(X) - X, axis=1)
        return gap <= tol * (1.0 + np.linalg.norm(X, axis=1))

    def _check_theta(self):
        if not self.contains(self.theta):
            raise ValueError(f"base point theta must lie in the {self.kind} set")

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class WholeSpace(ConstraintSet):
    kind = "whole-space"

    def project(self, x):
        return as_point(x, self.dim).copy()

    def project_rows(self, X):
        return np.array(X, dtype=float)

    def to_dict(self):
        return {"kind": self.kind, "theta": self.theta.tolist()}


@dataclass(frozen=True, eq=False)
class Box(ConstraintSet):
    lower: np.ndarray = None
    upper: np.ndarray = None
    kind = "box"

    def __post_init__(self):
        super().__post_init__()
        lo = _frozen(np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dim,)))
        hi = _frozen(np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dim,)))
        if np.any(lo > hi):
            raise ValueError("box lower bounds exceed upper bounds")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        self._check_theta()

    def project(self, x):
        return np.clip(as_point(x, self.dim), self.lower, self.upper)

    def project_rows(self, X):
        return np.clip(X, self.lower, self.upper)

    def to_dict(self):
        return {"kind": self.kind, "theta": self.theta.tolist(),
                "lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True, eq=False)
class Ball(ConstraintSet):
    center: np.ndarray = None
    radius: float = 1.0
    kind = "ball"

    def __post_init__(self):
        super().__post_init__()
        center = self.theta if self.center is None else self.center
        object.__setattr__(self, "center", _frozen(as_point(center, self.dim)))
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")
        object.__setattr__(self, "radius", float(self.radius))
        self._check_theta()

    def project(self, x):
        x = as_point(x, self.dim)
        d = x - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return x.copy()
        return self.center + (self.radius / r) * d

    def project_rows(self, X):
        D = X - self.center
        r = np.linalg.norm(D, axis=1, keepdims=True)
        out = self.center + (self.radius / np.where(r > 0, r, 1.0)) * D
        return np.where(r <= self.radius, X, out)

    def to_dict(self):
        return {"kind": self.kind, "theta": self.theta.tolist(),
                "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class AffineSubspace(ConstraintSet):
    """The set {x : A x = b}; A must have full row rank."""

    A: np.ndarray = None
    b: np.ndarray = None
    _pinv: np.ndarray = field(default=None, repr=False, compare=False)
    kind = "affine-subspace"

    def __post_init__(self):
        super().__post_init__()
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape[1] != self.dim or b.shape != (A.shape[0],):
            raise ValueError(f"inconsistent affine data: A {A.shape}, b {b.shape}")
        if np.linalg.matrix_rank(A) < A.shape[0]:
            raise ValueError("affine constraint matrix must have full row rank")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "_pinv", _frozen(np.linalg.pinv(A)))
        self._check_theta()

    def project(self, x):
        x = as_point(x, self.dim)
        return x - self._pinv @ (self.A @ x - self.b)

    def project_rows(self, X):
        return X - (X @ self.A.T - self.b) @ self._pinv.T

    def to_dict(self):
        return {"kind": self.kind, "theta": self.theta.tolist(),
                "A": self.A.tolist(), "b": self.b.tolist()}


@dataclass(frozen=True, eq=False)
class HalfspaceIntersection(ConstraintSet):
    """The polyhedron {x : G x <= h} with at most 12 rows.

    The projection enumerates candidate active sets: for each subset S of rows
    the nearest point of {G_S y = h_S} is formed, and the nearest feasible
    candidate is returned. The true projection is always among the candidates
    because some optimal multiplier is supported on independent rows.
    """

    G: np.ndarray = None
    h: np.ndarray = None
    kind = "halfspace-intersection"

    def __post_init__(self):
        super().__post_init__()
        G = np.atleast_2d(np.asarray(self.G, dtype=float))
        h = np.atleast_1d(np.asarray(self.h, dtype=float))
        if G.shape[1] != self.dim or h.shape != (G.shape[0],):
            raise ValueError(f"inconsistent halfspace data: G {G.shape}, h {h.shape}")
        if G.shape[0] > _MAX_HALFSPACES:
            raise ValueError(f"at most {_MAX_HALFSPACES} halfspaces are supported")
        if np.any(np.linalg.norm(G, axis=1) == 0):
            raise ValueError("halfspace normals must be nonzero")
        object.__setattr__(self, "G", _frozen(G))
        object.__setattr__(self, "h", _frozen(h))
        self._check_theta()

    def _feasible(self, y, scale):
        return np.all(self.G @ y - self.h <= _MEMBER_TOL * scale)

    def project(self, x):
        x = as_point(x, self.dim)
        scale = 1.0 + np.linalg.norm(x) + np.abs(self.h).max()
        if self._feasible(x, scale):
            return x.copy()
        if self.G.shape[0] == 1:
            g = self.G[0]
            return x - ((g @ x - self.h[0]) / (g @ g)) * g
        best, best_d = None, np.inf
        rows = range(self.G.shape[0])
        for size in range(1, min(self.G.shape[0], self.dim) + 1):
            for S in combinations(rows, size):
                GS = self.G[list(S)]
                gram = GS @ GS.T
                if np.linalg.matrix_rank(gram) < size:
                    continue
                mu = np.linalg.solve(gram, GS @ x - self.h[list(S)])
                y = x - GS.T @ mu
                d = np.linalg.norm(y - x)
                if d < best_d and self._feasible(y, scale):
                    best, best_d = y, d
        if best is None:
            raise ValueError("halfspace intersection appears to be empty")
        return best

    def project_rows(self, X):
        if self.G.shape[0] > 1:
            return super().project_rows(X)
        g, h0 = self.G[0], self.h[0]
        viol = X @ g - h0
        scale = 1.0 + np.linalg.norm(X, axis=1) + abs(h0)
        step = np.where(viol <= _MEMBER_TOL * scale, 0.0, viol / (g @ g))
        return X - step[:, None] * g

    def to_dict(self):
        return {"kind": self.kind, "theta": self.theta.tolist(),
                "G": self.G.tolist(), "h": self.h.tolist()}


def halfspace(normal, offset, theta):
    """The halfspace {x : normal . x <= offset}."""
    return HalfspaceIntersection(theta=theta, G=[normal], h=[offset])


def project_onto_set(S, x):
    """Euclidean projection of `x` onto the constraint set `S`."""
    if not isinstance(S, ConstraintSet) or type(S) is ConstraintSet:
        raise TypeError(f"unsupported constraint set: {S!r}")
    return S.project(x)


def constraint_set_from_dict(d):
    d = dict(d)
    kind = d.pop("kind")
    classes = {c.kind: c for c in (WholeSpace, Box, Ball, AffineSubspace,
                                   HalfspaceIntersection)}
    if kind == "halfspace":
        return halfspace(d["normal"], d["offset"], d["theta"])
    if kind not in classes:
        raise ValueError(f"unknown constraint set kind {kind!r}")
    return classes[kind](**d)


def sample_ball(center, radius, n, rng):
    """`n` points uniform in the closed ball B(center, radius), one per row."""
    center = np.asarray(center, dtype=float)
    dim = center.shape[0]
    g = rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(n, 1)) ** (1.0 / dim)
    return center + r * g


def sample_set(C, center, radius, n, rng, max_rounds=200):
    """`n` points of C intersected with B(center, radius); `center` must be in C.

    Full-dimensional sets use rejection from the ball. For an affine subspace
    the ball samples are projected onto C, which keeps them inside the ball
    because the projection is nonexpansive and fixes `center`.
    """
    center = as_point(center, C.dim)
    if isinstance(C, AffineSubspace):
        pts = sample_ball(center, radius, n, rng)
        return np.array([C.project(p) for p in pts])
    if isinstance(C, WholeSpace):
        return sample_ball(center, radius, n, rng)
    out = []
    for _ in range(max_rounds):
        for p in sample_ball(center, radius, n, rng):
            if C.contains(p, tol=0.0):
                out.append(p)
                if len(out) == n:
                    return np.array(out)
    raise RuntimeError("rejection sampling of C within the ball did not terminate")


def grid_points(C, center, radius, per_axis):
    """Regular grid over the bounding box of B(center, radius), kept inside
    the ball and C. Intended for n <= 2 brute-force checks."""
    center = as_point(center, C.dim)
    axes = [np.linspace(c - radius, c + radius, per_axis) for c in center]
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    keep = np.linalg.norm(pts - center, axis=1) <= radius
    pts = pts[keep]
    return pts[C.contains_rows(pts)]
