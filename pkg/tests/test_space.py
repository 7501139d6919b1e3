import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from paraunion.space import (AffineSubspace, Ball, Box, HalfspaceIntersection,
                             WholeSpace, ball_contains, distance, grid_points,
                             halfspace, project_onto_set, sample_set)


finite = st.floats(-1e3, 1e3, allow_nan=False)
vec3 = arrays(np.float64, 3, elements=finite)


@pytest.mark.parametrize("x, y, d", [
    ((0, 0), (3, 4), 5.0),
    ((1, 1), (1, 1), 0.0),
    ((2,), (-1,), 3.0),
])
def test_distance_examples(x, y, d):
    assert distance(x, y) == d


def test_distance_dimension_mismatch():
    with pytest.raises(ValueError):
        distance((1, 2), (1, 2, 3))


@given(vec3, vec3, vec3)
def test_distance_is_a_metric(x, y, z):
    assert distance(x, y) >= 0
    assert distance(x, y) == distance(y, x)
    assert distance(x, z) <= distance(x, y) + distance(y, z) + 1e-9
    assert (distance(x, x) == 0)


def test_ball_contains_closed():
    assert ball_contains((0, 0), 1, (1, 0))
    assert not ball_contains((0, 0), 1, (1.0000001, 0))
    assert ball_contains((0,), 0, (0,))
    with pytest.raises(ValueError):
        ball_contains((0,), -1, (0,))


def test_projection_examples():
    box = Box(theta=[0.5, 0.5], lower=0, upper=1)
    np.testing.assert_array_equal(project_onto_set(box, [2, 0.5]), [1, 0.5])
    aff = AffineSubspace(theta=[0, 0], A=[[1, 1]], b=[0])
    np.testing.assert_allclose(project_onto_set(aff, [1, 1]), [0, 0], atol=1e-15)
    ball = Ball(theta=[0, 0], radius=1)
    np.testing.assert_allclose(project_onto_set(ball, [0, 2]), [0, 1])


def test_theta_must_lie_in_set():
    with pytest.raises(ValueError):
        Box(theta=[2.0], lower=0, upper=1)


def _sets():
    return [
        WholeSpace(theta=np.zeros(3)),
        Box(theta=np.zeros(3), lower=[-1, -2, -0.5], upper=[1, 0.5, 2]),
        Ball(theta=np.zeros(3), center=[0.5, 0, 0], radius=1.5),
        AffineSubspace(theta=np.zeros(3), A=[[1, 2, -1], [0, 1, 1]], b=[0, 0]),
        HalfspaceIntersection(theta=np.zeros(3), G=[[1, 0, 0], [1, 1, 0], [0, -1, 1], [-1, 0, -1]],
                              h=[1, 1.5, 0.5, 2]),
    ]


@pytest.mark.parametrize("S", _sets(), ids=lambda S: S.kind)
@settings(max_examples=150, deadline=None)
@given(x=vec3, y=vec3)
def test_projection_firmly_nonexpansive(S, x, y):
    px, py = S.project(x), S.project(y)
    lhs = np.dot(px - py, px - py)
    rhs = np.dot(px - py, x - y)
    # rounding in px - py is amplified by |x - y|
    assert lhs <= rhs + 1e-10 * (1 + np.linalg.norm(x - y))


@pytest.mark.parametrize("S", _sets(), ids=lambda S: S.kind)
def test_projection_idempotent_and_identity_on_set(S):
    rng = np.random.default_rng(0)
    for x in rng.normal(scale=4, size=(100, 3)):
        p = S.project(x)
        assert S.contains(p)
        np.testing.assert_allclose(S.project(p), p, atol=1e-12)


def test_halfspace_intersection_matches_brute_force_qp():
    # oracle: minimize ||y - x|| over a fine grid of the feasible polygon
    S = HalfspaceIntersection(theta=[0, 0], G=[[1, 0], [0, 1], [1, 1]], h=[1, 1, 1.5])
    g = np.linspace(-3, 1, 801)
    Y = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    Y = Y[np.all(Y @ np.array([[1, 0], [0, 1], [1, 1]]).T <= np.array([1, 1, 1.5]) + 1e-12, axis=1)]
    for x in ([2, 2], [3, -1], [0.9, 0.9], [-2, 5]):
        best = Y[np.argmin(np.linalg.norm(Y - x, axis=1))]
        assert np.linalg.norm(S.project(x) - best) <= 0.01


def test_single_halfspace_formula():
    H = halfspace([1, 0], 0, [0, 0])
    np.testing.assert_array_equal(H.project([2, 0]), [0, 0])


@pytest.mark.parametrize("S", _sets(), ids=lambda S: S.kind)
def test_samples_bounded_witness(S):
    rng = np.random.default_rng(1)
    M = 2.0
    pts = sample_set(S, S.theta, M, 200, rng)
    assert pts.shape == (200, 3)
    norms = np.linalg.norm(pts, axis=1)
    assert np.all(norms <= np.linalg.norm(S.theta) + M + 1e-12)
    assert all(S.contains(p) for p in pts)


def test_grid_points_in_ball():
    S = WholeSpace(theta=[0.0])
    pts = grid_points(S, S.theta, 4.0, 101)
    assert pts.shape == (101, 1)
    assert pts.min() == -4 and pts.max() == 4


@pytest.mark.parametrize("S", _sets() + [halfspace([1, -2, 0.5], 0.3, [0, 0, 0])],
                         ids=lambda S: S.kind)
def test_row_projection_matches_pointwise(S):
    X = np.random.default_rng(2).normal(scale=3, size=(300, 3))
    np.testing.assert_allclose(S.project_rows(X), [S.project(x) for x in X], atol=1e-12)
    assert S.contains_rows(X).tolist() == [S.contains(x) for x in X]
