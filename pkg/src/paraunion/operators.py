"""Single-valued continuous paracontracting operators and an empirical
validator for the paracontraction inequality.

A map T is a paracontraction when, for every fixed point z,
``||z - T(x)|| <= ||z - x||`` for all x, with strict inequality whenever x is
not itself fixed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .space import (AffineSubspace, Ball, ConstraintSet, WholeSpace, as_point,
                    constraint_set_from_dict, sample_set)


__all__ = [
    "TOL_FIX", "Paracontraction", "ConvexProjection", "SubspaceProjection",
    "Scaling", "strict_contraction", "AveragedComposition", "evaluate",
    "fixed_points_hint", "find_fixed_point", "FixedPointNotFound",
    "A2Violation", "A2Report", "validate_paracontraction",
    "probe_continuity", "probe_maps_into", "operator_from_dict",
]

TOL_FIX = 1e-9


class FixedPointNotFound(RuntimeError):
    pass


class Paracontraction:
    """Base class; subclasses implement ``_apply`` on validated points."""

    kind = "abstract"
    dim: int

    def __call__(self, x):
        return self._apply(as_point(x, self.dim))

    def _apply(self, x):
        raise NotImplementedError

    def apply_rows(self, X):
        """Apply to each row of an (N, dim) array."""
        X = np.asarray(X, dtype=float)
        return np.array([self._apply(x) for x in X]).reshape(X.shape)

    def is_fixed(self, x, tol=TOL_FIX):
        x = as_point(x, self.dim)
        return float(np.linalg.norm(self._apply(x) - x)) <= tol

    def fixed_points_hint(self):
        """Closed-form description of Fix(T) as a constraint set, or None."""
        return None

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class ConvexProjection(Paracontraction):
    """Metric projection onto a closed convex set; fixes exactly that set."""

    target: ConstraintSet
    kind = "convex-projection"

    @property
    def dim(self):
        return self.target.dim

    def _apply(self, x):
        return self.target.project(x)

    def apply_rows(self, X):
        return self.target.project_rows(np.asarray(X, dtype=float))

    def fixed_points_hint(self):
        return self.target

    def to_dict(self):
        return {"kind": self.kind, "set": self.target.to_dict()}


@dataclass(frozen=True, eq=False)
class SubspaceProjection(Paracontraction):
    """Zero every coordinate outside `support` (0-based indices)."""

    support: tuple
    dim: int
    _mask: np.ndarray = field(default=None, repr=False, compare=False)
    kind = "coordinate-subspace-projection"

    def __post_init__(self):
        support = tuple(sorted(int(j) for j in self.support))
        if any(j < 0 or j >= self.dim for j in support):
            raise ValueError(f"support {support} outside 0..{self.dim - 1}")
        mask = np.zeros(self.dim, dtype=bool)
        mask[list(support)] = True
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "_mask", mask)

    def _apply(self, x):
        return np.where(self._mask, x, 0.0)

    def apply_rows(self, X):
        return np.where(self._mask, np.asarray(X, dtype=float), 0.0)

    def fixed_points_hint(self):
        off = [j for j in range(self.dim) if j not in self.support]
        if not off:
            return WholeSpace(theta=np.zeros(self.dim))
        A = np.eye(self.dim)[off]
        return AffineSubspace(theta=np.zeros(self.dim), A=A, b=np.zeros(len(off)))

    def to_dict(self):
        return {"kind": self.kind, "support": list(self.support), "dim": self.dim}


@dataclass(frozen=True, eq=False)
class Scaling(Paracontraction):
    """x -> center + factor (x - center).

    A paracontraction for 0 <= factor <= 1. Factors above one give expansions,
    which exist only as negative controls for the validator.
    """

    factor: float
    center: np.ndarray
    kind = "scaling"

    def __post_init__(self):
        c = as_point(self.center).copy()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if self.factor < 0:
            raise ValueError("scaling factor must be nonnegative")

    @property
    def dim(self):
        return self.center.shape[0]

    def _apply(self, x):
        return self.center + self.factor * (x - self.center)

    def apply_rows(self, X):
        return self.center + self.factor * (np.asarray(X, dtype=float) - self.center)

    def fixed_points_hint(self):
        if self.factor == 1.0:
            return WholeSpace(theta=self.center)
        return Ball(theta=self.center, center=self.center, radius=0.0)

    def to_dict(self):
        return {"kind": self.kind, "factor": self.factor,
                "center": self.center.tolist()}


def strict_contraction(factor, center):
    """The strict contraction x -> center + factor (x - center), factor in (0, 1)."""
    if not 0.0 < factor < 1.0:
        raise ValueError("contraction factor must lie in (0, 1)")
    return Scaling(factor, center)


@dataclass(frozen=True, eq=False)
class AveragedComposition(Paracontraction):
    """x -> (1 - alpha) x + alpha (T_k o ... o T_1)(x), operators applied in list order."""

    operators: tuple
    alpha: float = 1.0
    kind = "averaged-composition"

    def __post_init__(self):
        ops = tuple(self.operators)
        if not ops:
            raise ValueError("composition needs at least one operator")
        if len({op.dim for op in ops}) != 1:
            raise ValueError("composed operators must share a dimension")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("averaging weight must lie in (0, 1]")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self):
        return self.operators[0].dim

    def _apply(self, x):
        y = x
        for op in self.operators:
            y = op._apply(y)
        if self.alpha == 1.0:
            return y
        return (1.0 - self.alpha) * x + self.alpha * y

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha,
                "operators": [op.to_dict() for op in self.operators]}


def operator_from_dict(d):
    kind = d["kind"]
    if kind == "convex-projection":
        return ConvexProjection(constraint_set_from_dict(d["set"]))
    if kind == "coordinate-subspace-projection":
        return SubspaceProjection(tuple(d["support"]), int(d["dim"]))
    if kind == "scaling":
        return Scaling(float(d["factor"]), d["center"])
    if kind == "strict-contraction":
        return strict_contraction(float(d["factor"]), d["center"])
    if kind == "averaged-composition":
        return AveragedComposition(tuple(operator_from_dict(o) for o in d["operators"]),
                                   float(d.get("alpha", 1.0)))
    raise ValueError(f"unknown operator kind {kind!r}")


def evaluate(T, x):
    return T(x)


def fixed_points_hint(T):
    return T.fixed_points_hint()


def find_fixed_point(T, start, tol=TOL_FIX, max_iter=100_000):
    """A fixed point of T near `start`.

    Uses the closed-form fixed set when known (projecting `start` onto it),
    otherwise iterates T from `start` until successive iterates agree to
    roughly machine precision.
    """
    start = as_point(start, T.dim)
    hint = T.fixed_points_hint()
    if hint is not None:
        z = hint.project(start)
        if T.is_fixed(z, tol):
            return z
    x = start
    scale = 1.0 + np.linalg.norm(start)
    for _ in range(max_iter):
        y = T._apply(x)
        if np.linalg.norm(y - x) <= 1e-14 * scale:
            x = y
            break
        x = y
    if not T.is_fixed(x, tol):
        raise FixedPointNotFound("cannot validate (A2) without Fix(T)")
    return x


@dataclass
class A2Violation:
    z: np.ndarray
    x: np.ndarray
    dist_image: float
    dist_point: float
    strict: bool  # True: non-fixed x without strict decrease


@dataclass
class A2Report:
    operator: str
    samples: int
    violations: list
    max_slack: float  # max of ||z - Tx|| - ||z - x|| over non-fixed samples

    @property
    def passed(self):
        return not self.violations


def validate_paracontraction(T, C, M, n_samples=1000, seed=0, tol=1e-10,
                             z=None, move_tol=1e-6, name=None):
    """Sample x in C within distance M of theta and test the paracontraction
    inequalities against a fixed point z of T.

    A weak violation is ``||z - Tx|| > ||z - x|| + tol``. Samples that move by
    more than `move_tol` must decrease their distance to z strictly.
    `max_slack` is the largest ||z - Tx|| - ||z - x|| over those moving
    samples (-inf when none moved).
    """
    z = find_fixed_point(T, C.theta) if z is None else as_point(z, T.dim)
    if not T.is_fixed(z):
        raise FixedPointNotFound("cannot validate (A2) without Fix(T)")
    rng = np.random.default_rng(seed)
    xs = sample_set(C, C.theta, M, n_samples, rng)
    violations = []
    max_slack = -np.inf
    for x in xs:
        tx = T._apply(x)
        d_img = float(np.linalg.norm(z - tx))
        d_pt = float(np.linalg.norm(z - x))
        moved = np.linalg.norm(tx - x) > move_tol
        if moved:
            max_slack = max(max_slack, d_img - d_pt)
        if d_img > d_pt + tol:
            violations.append(A2Violation(z, x, d_img, d_pt, strict=False))
        elif moved and not d_img < d_pt:
            violations.append(A2Violation(z, x, d_img, d_pt, strict=True))
    return A2Report(name or T.kind, len(xs), violations, float(max_slack))


def probe_continuity(T, C, M, n_samples=200, seed=0, step=1e-3):
    """Largest observed ratio ||T(x+h) - T(x)|| / ||h|| for small random h."""
    rng = np.random.default_rng(seed)
    xs = sample_set(C, C.theta, M, n_samples, rng)
    worst = 0.0
    for x in xs:
        h = rng.standard_normal(T.dim)
        h *= step * rng.uniform() / np.linalg.norm(h)
        y = C.project(x + h)
        dh = np.linalg.norm(y - x)
        if dh > 0:
            worst = max(worst, np.linalg.norm(T._apply(y) - T._apply(x)) / dh)
    return float(worst)


def probe_maps_into(T, C, M, n_samples=200, seed=0):
    """Number of sampled images T(x) that fall outside C."""
    rng = np.random.default_rng(seed)
    xs = sample_set(C, C.theta, M, n_samples, rng)
    return sum(not C.contains(T._apply(x)) for x in xs)
