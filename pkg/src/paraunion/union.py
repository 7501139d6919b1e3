"""Set-valued operators built as unions of paracontractions.

A :class:`UnionOperator` pairs a finite operator family with a selection
function phi; its value at x is the finite set {T_i(x) : i in phi(x)}.
Operator keys are 0-based integers for explicit lists and sorted index tuples
for the lazily built sparse-support families.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .operators import (TOL_FIX, AveragedComposition, ConvexProjection,
                        SubspaceProjection)
from .space import AffineSubspace, WholeSpace, as_point, sample_set


__all__ = [
    "OperatorList", "SupportFamily", "ConstantFull", "NearestOperators",
    "SparseSupport", "SelectionPolicy", "UnionOperator", "select_indices",
    "apply_union", "choose_next", "A3Report", "check_A3",
    "best_s_term_supports",
]


class OperatorList:
    """Explicit operator family keyed 0..m-1."""

    def __init__(self, operators):
        ops = tuple(operators)
        if not ops:
            raise ValueError("an operator family needs at least one operator")
        if len({op.dim for op in ops}) != 1:
            raise ValueError("all operators must share a dimension")
        self.operators = ops
        self.dim = ops[0].dim

    def keys(self):
        return tuple(range(len(self.operators)))

    def __getitem__(self, key):
        return self.operators[key]

    def __len__(self):
        return len(self.operators)

    def to_dict(self):
        return {"kind": "list", "operators": [op.to_dict() for op in self.operators]}


class SupportFamily:
    """Operators T_J = outer o P_J over all supports J of size s.

    P_J zeroes coordinates outside J; with an affine outer set this is the
    projection-based sparse feasibility step. Members are built on demand.
    """

    def __init__(self, dim, s, outer):
        if not 1 <= s <= dim:
            raise ValueError("support size must lie in 1..dim")
        self.dim = dim
        self.s = s
        self.outer = outer
        self._build = lru_cache(maxsize=None)(self._make)

    def _make(self, key):
        inner = SubspaceProjection(key, self.dim)
        if isinstance(self.outer, WholeSpace):
            return inner
        return AveragedComposition((inner, ConvexProjection(self.outer)))

    def keys(self):
        return tuple(combinations(range(self.dim), self.s))

    def __getitem__(self, key):
        key = tuple(sorted(int(j) for j in key))
        if len(key) != self.s:
            raise KeyError(f"support {key} does not have size {self.s}")
        return self._build(key)

    def __len__(self):
        return comb(self.dim, self.s)

    def to_dict(self):
        return {"kind": "supports", "dim": self.dim, "s": self.s,
                "outer": self.outer.to_dict()}


@dataclass(frozen=True)
class ConstantFull:
    """phi(x) = every key of the family."""

    kind = "constant-full"

    def select(self, family, x):
        return family.keys()


@dataclass(frozen=True)
class NearestOperators:
    """Keys whose move ||T_i(x) - x|| is within `tau` of the smallest move."""

    tau: float = 1e-12
    kind = "nearest-operators"

    def select(self, family, x):
        keys = family.keys()
        moves = np.array([np.linalg.norm(family[k]._apply(x) - x) for k in keys])
        best = moves.min()
        return tuple(k for k, m in zip(keys, moves) if m <= best + self.tau)


def best_s_term_supports(x, s, tau=0.0):
    """All size-s supports of a best s-term approximation of `x`, allowing
    magnitudes within `tau` of the s-th largest to tie."""
    mags = np.abs(np.asarray(x, dtype=float))
    if not 1 <= s <= mags.shape[0]:
        raise ValueError("support size must lie in 1..dim")
    kth = np.sort(mags)[::-1][s - 1]
    forced = [j for j in range(mags.shape[0]) if mags[j] > kth + tau]
    tied = [j for j in range(mags.shape[0]) if abs(mags[j] - kth) <= tau]
    need = s - len(forced)
    return tuple(tuple(sorted(forced + list(c))) for c in combinations(tied, need))


@dataclass(frozen=True)
class SparseSupport:
    """phi(x) = supports of the s largest |x_j|, all near-ties included."""

    s: int
    tau: float = 1e-12
    kind = "sparse-support"

    def select(self, family, x):
        return tuple(sorted(best_s_term_supports(x, self.s, self.tau)))


def selection_from_dict(d):
    kind = d["kind"]
    if kind == "constant-full":
        return ConstantFull()
    if kind == "nearest-operators":
        return NearestOperators(float(d.get("tau_tie", 1e-12)))
    if kind == "sparse-support":
        return SparseSupport(int(d["s"]), float(d.get("tau_tie", 1e-12)))
    raise ValueError(f"unknown selection kind {kind!r}")


def selection_to_dict(phi):
    d = {"kind": phi.kind}
    if hasattr(phi, "tau"):
        d["tau_tie"] = phi.tau
    if hasattr(phi, "s"):
        d["s"] = phi.s
    return d


@dataclass(frozen=True)
class SelectionPolicy:
    """How one image is picked from T(x): 'first-index', 'greedy-min-move' or
    'seeded-random'. The random kind draws from a generator created per run."""

    kind: str = "first-index"
    seed: int = 0

    KINDS = ("first-index", "greedy-min-move", "seeded-random")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown selection policy {self.kind!r}")

    def make_rng(self):
        return np.random.default_rng(self.seed) if self.kind == "seeded-random" else None


class UnionOperator:
    """x -> {T_i(x) : i in phi(x)} over a family of paracontractions on C."""

    def __init__(self, family, selection, C):
        if isinstance(family, (list, tuple)):
            family = OperatorList(family)
        if family.dim != C.dim:
            raise ValueError("operators and constraint set differ in dimension")
        self.family = family
        self.selection = selection
        self.C = C

    @property
    def dim(self):
        return self.family.dim

    @property
    def m(self):
        return len(self.family)

    def select(self, x):
        idx = self.selection.select(self.family, as_point(x, self.dim))
        if not idx:
            raise RuntimeError("selection function returned an empty index set")
        return idx

    def apply(self, x):
        x = as_point(x, self.dim)
        return [(k, self.family[k]._apply(x)) for k in self.select(x)]

    def is_strong_fixed_point(self, z, tol=TOL_FIX):
        """Membership in the common fixed set of every operator of the family."""
        return all(self.family[k].is_fixed(z, tol) for k in self.family.keys())

    def is_selected_fixed_point(self, z, tol=TOL_FIX):
        """Every operator selected at z fixes z."""
        return all(self.family[k].is_fixed(z, tol) for k in self.select(z))

    def is_fixed_point(self, z, tol=TOL_FIX):
        """z in T(z): some selected operator fixes z."""
        return any(self.family[k].is_fixed(z, tol) for k in self.select(z))


def select_indices(phi, family, x):
    return phi.select(family, as_point(x, family.dim))


def apply_union(U, x):
    return U.apply(x)


def choose_next(U, policy, x, rng=None, candidates=None):
    """One (image, key) pair of T(x), chosen by `policy`."""
    x = as_point(x, U.dim)
    cands = U.apply(x) if candidates is None else candidates
    if policy.kind == "first-index":
        k, img = cands[0]
    elif policy.kind == "greedy-min-move":
        moves = [np.linalg.norm(img - x) for _, img in cands]
        k, img = cands[int(np.argmin(moves))]
    else:
        if rng is None:
            rng = policy.make_rng()
        k, img = cands[int(rng.integers(len(cands)))]
    return img, k


@dataclass
class A3Report:
    point: np.ndarray
    radii: tuple
    violations: dict       # radius -> number of probes with phi(y) not in phi(x)
    passing_radius: float  # largest clean radius, or None
    witness: np.ndarray    # a violating y at the smallest radius, when failing

    @property
    def passed(self):
        return self.passing_radius is not None


def check_A3(U, x, n_probe=100, radii=(1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6), seed=0):
    """Falsification probe for local inclusion of the selection sets.

    Samples `n_probe` points y of C within each radius of x and checks
    phi(y) is a subset of phi(x). Passes when some radius in the schedule
    shows no violation; this can only certify that none was found.
    """
    x = as_point(x, U.dim)
    base = set(U.select(x))
    rng = np.random.default_rng(seed)
    radii = tuple(sorted(radii, reverse=True))
    violations, witness = {}, None
    passing = None
    for r in radii:
        ys = sample_set(U.C, x, r, n_probe, rng)
        bad = [y for y in ys if not set(U.select(y)) <= base]
        violations[r] = len(bad)
        if bad:
            witness = bad[0]
        elif passing is None:
            passing = r
    return A3Report(x, radii, violations, passing, None if passing else witness)


def sparse_affine_union(A, b, s, tau=1e-12, theta=None):
    """Union over supports of P_affine o P_J with the sparse-support selection."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    outer = AffineSubspace(theta=np.linalg.pinv(A) @ np.asarray(b, dtype=float),
                           A=A, b=b)
    C = WholeSpace(theta=np.zeros(n) if theta is None else theta)
    return UnionOperator(SupportFamily(n, s, outer), SparseSupport(s, tau), C)
