import numpy as np
import pytest

from benchmarks import operator_zoo
from paraunion.operators import (AveragedComposition, ConvexProjection,
                                 FixedPointNotFound, Scaling, SubspaceProjection,
                                 evaluate, find_fixed_point, fixed_points_hint,
                                 probe_continuity, probe_maps_into,
                                 strict_contraction, validate_paracontraction)
from paraunion.space import (AffineSubspace, Ball, Box, WholeSpace, halfspace,
                             sample_set)


def test_evaluate_examples():
    np.testing.assert_array_equal(evaluate(strict_contraction(0.5, [0.0]), [4.0]), [2.0])
    np.testing.assert_array_equal(evaluate(SubspaceProjection((0, 2), 3), [3, 1, 2]), [3, 0, 2])
    P = ConvexProjection(halfspace([1, 0], 0, [0, 0]))
    np.testing.assert_array_equal(evaluate(P, [2, 0]), [0, 0])


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        strict_contraction(0.5, [0.0, 0.0])([1.0])


def test_strict_contraction_range():
    for c in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            strict_contraction(c, [0.0])


def test_fixed_points_hints():
    box = Box(theta=[0.5, 0.5], lower=0, upper=1)
    assert fixed_points_hint(ConvexProjection(box)) is box
    hint = fixed_points_hint(strict_contraction(0.3, [1.0, -2.0]))
    np.testing.assert_array_equal(hint.project([5.0, 5.0]), [1.0, -2.0])
    sub = fixed_points_hint(SubspaceProjection((1,), 3))
    assert sub.contains([0, 7, 0]) and not sub.contains([1, 7, 0])
    comp = AveragedComposition((ConvexProjection(box), ConvexProjection(Ball(theta=[0.5, 0.5], radius=1))))
    assert fixed_points_hint(comp) is None


def test_composition_fixed_point_found_numerically():
    box = Box(theta=[0.5, 0.5], lower=0, upper=1)
    ball = Ball(theta=[0.5, 0.5], center=[1.5, 0.5], radius=1)
    T = AveragedComposition((ConvexProjection(box), ConvexProjection(ball)), alpha=0.5)
    z = find_fixed_point(T, [-3.0, 4.0])
    assert T.is_fixed(z)
    assert box.contains(z) and ball.contains(z)


def test_undiscoverable_fixed_point_raises():
    # two lines through 0 at a tiny angle: alternating projections crawl
    a = 1e-3
    l1 = AffineSubspace(theta=[0, 0], A=[[0, 1]], b=[0])
    l2 = AffineSubspace(theta=[0, 0], A=[[-np.sin(a), np.cos(a)]], b=[0])
    T = AveragedComposition((ConvexProjection(l1), ConvexProjection(l2)))
    with pytest.raises(FixedPointNotFound, match="without Fix"):
        find_fixed_point(T, [10.0, 0.0], max_iter=50)


_zoo = operator_zoo


@pytest.mark.parametrize("name, T, C", _zoo(), ids=[z[0] for z in _zoo()])
def test_zoo_passes_a2(name, T, C):
    rep = validate_paracontraction(T, C, M=10.0, n_samples=1000, seed=3)
    assert rep.samples == 1000
    assert rep.passed, rep.violations[:3]
    assert rep.max_slack < 0


@pytest.mark.parametrize("name, T, C", _zoo(), ids=[z[0] for z in _zoo()])
def test_zoo_continuity_and_range(name, T, C):
    assert probe_continuity(T, C, M=5.0, seed=1) <= 1.0 + 1e-9
    assert probe_maps_into(T, C, M=5.0) == 0


@pytest.mark.parametrize("name, T, C", [z for z in _zoo() if z[0].startswith("proj")],
                         ids=[z[0] for z in _zoo() if z[0].startswith("proj")])
def test_projections_idempotent(name, T, C):
    rng = np.random.default_rng(0)
    for x in rng.normal(scale=5, size=(50, 2)):
        np.testing.assert_allclose(T(T(x)), T(x), atol=1e-12)


def test_contraction_decrease_factor_exact():
    T = strict_contraction(0.5, [0.0])
    rep = validate_paracontraction(T, WholeSpace(theta=[0.0]), M=10.0, n_samples=1000, seed=0)
    assert rep.passed


def test_expansion_detected():
    T = Scaling(1.1, [0.0, 0.0])
    rep = validate_paracontraction(T, WholeSpace(theta=np.zeros(2)), M=10.0, n_samples=1000)
    assert not rep.passed
    assert len(rep.violations) >= 1
    v = rep.violations[0]
    assert v.dist_image == pytest.approx(1.1 * v.dist_point)
    # slack oracle: 0.1 |x| is largest for the sample farthest from the center
    xs = sample_set(WholeSpace(theta=np.zeros(2)), np.zeros(2), 10.0, 1000,
                    np.random.default_rng(0))
    assert rep.max_slack == pytest.approx(0.1 * np.linalg.norm(xs, axis=1).max())


def test_box_projection_a2_against_brute_force():
    # oracle: clip by hand and check the inequality on the same samples
    box = Box(theta=[0.5, 0.5], lower=0, upper=1)
    C = WholeSpace(theta=np.zeros(2))
    z = np.array([0.5, 0.5])
    xs = sample_set(C, C.theta, 5.0, 1000, np.random.default_rng(42))
    tx = np.minimum(np.maximum(xs, 0.0), 1.0)
    assert np.all(np.linalg.norm(tx - z, axis=1) <= np.linalg.norm(xs - z, axis=1) + 1e-10)
    rep = validate_paracontraction(ConvexProjection(box), C, M=5.0, n_samples=1000, seed=42, z=z)
    assert rep.passed and rep.samples == 1000


def test_validation_deterministic():
    T = ConvexProjection(Ball(theta=np.zeros(2), radius=1.0))
    C = WholeSpace(theta=np.zeros(2))
    a = validate_paracontraction(T, C, 5.0, 300, seed=9)
    b = validate_paracontraction(T, C, 5.0, 300, seed=9)
    assert a.max_slack == b.max_slack


@pytest.mark.parametrize("name, T, C", _zoo(), ids=[z[0] for z in _zoo()])
def test_row_apply_matches_pointwise(name, T, C):
    X = np.random.default_rng(4).normal(scale=3, size=(200, 2))
    np.testing.assert_allclose(T.apply_rows(X), [T(x) for x in X], atol=1e-12)
