import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_distortion
from lipembed.errors import EmptySecantError, PreconditionError
from lipembed.geometry import (
    Direction,
    PointCloud,
    SampledMap,
    canonicalize,
    check_injective,
    distortion,
    distortion_arrays,
    secant_directions,
    sin_angle,
    sin_angle_formula,
)


def test_cloud_rejects_coincident_points():
    with pytest.raises(PreconditionError):
        PointCloud([[0.0, 1.0], [0.0, 1.0]])


def test_cloud_rejects_bad_dims_and_values():
    with pytest.raises(PreconditionError):
        PointCloud([[0.0, 1.0]], intrinsic_dim=3)
    with pytest.raises(PreconditionError):
        PointCloud([[0.0, np.nan]])


def test_cloud_is_read_only():
    c = PointCloud([[0.0, 1.0], [2.0, 3.0]])
    with pytest.raises(ValueError):
        c.points[0, 0] = 5.0


def test_canonical_direction():
    d = Direction([-3.0, 4.0])
    assert np.allclose(d.vector, [0.6, -0.8])
    assert np.linalg.norm(d.vector) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(canonicalize([0.0, -2.0, 1.0]), np.array([0.0, 2.0, -1.0]) / math.sqrt(5))


def test_secants_single_pair():
    s = secant_directions(PointCloud([[0.0, 0.0], [1.0, 0.0]]))
    assert len(s) == 1 and np.allclose(s.directions[0], [1.0, 0.0])


def test_secants_collinear_dedup():
    s = secant_directions(PointCloud([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]))
    assert len(s) == 1
    assert len(secant_directions(PointCloud([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), dedup=False)) == 3


def test_secants_triangle():
    # hand normalisation of the three pair differences
    want = {(1.0, 0.0), (0.0, 1.0), (1 / math.sqrt(2), -1 / math.sqrt(2))}
    got = secant_directions(PointCloud([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])).directions
    assert len(got) == 3
    for w in want:
        assert np.min(np.linalg.norm(got - np.array(w), axis=1)) < 1e-12


def test_secants_need_two_points():
    with pytest.raises(EmptySecantError):
        secant_directions(PointCloud([[1.0, 2.0]]))


def test_sin_angle_examples():
    assert sin_angle([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert sin_angle([1.0, 0.0], [1.0, 0.0]) == 0.0
    assert sin_angle([1.0, 0.0], np.array([1.0, 1.0]) / math.sqrt(2)) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)
    with pytest.raises(PreconditionError):
        sin_angle([1.0, 0.0], [1.0, 0.0, 0.0])


vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 1e-3)


@settings(max_examples=200, deadline=None)
@given(vec, vec)
def test_sin_angle_symmetric_and_sign_invariant(p, s):
    a = sin_angle(p, s)
    assert a == pytest.approx(sin_angle(s, p), abs=1e-12)
    assert a == pytest.approx(sin_angle(np.negative(p), s), abs=1e-12)
    assert a == pytest.approx(sin_angle_formula(p, s), abs=1e-6)
    assert sin_angle(p, p) <= 1e-12


def test_distortion_examples():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(20, 3))
    c = PointCloud(pts)
    rep = distortion(SampledMap(c, c))
    assert rep.lower == pytest.approx(1.0) and rep.upper == pytest.approx(1.0)
    rep = distortion_arrays(pts, 2 * pts)
    assert rep.lower == pytest.approx(2.0) and rep.upper == pytest.approx(2.0)
    rep = distortion_arrays(np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([[0.0, 0.0], [1.0, 0.0]]))
    assert rep.lower == pytest.approx(1 / math.sqrt(2)) and rep.upper == pytest.approx(1 / math.sqrt(2))


def test_distortion_flags_collapse():
    rep = distortion_arrays(np.array([[0.0], [1.0], [2.0]]), np.array([[0.0], [1.0], [0.0]]))
    assert rep.lower == 0 and not rep.injective
    assert set(rep.witness_lower) == {0, 2}
    with pytest.raises(PreconditionError):
        check_injective(np.array([[0.0], [1.0], [0.0]]))


def test_distortion_matches_brute_force_and_witnesses():
    rng = np.random.default_rng(3)
    src = rng.normal(size=(25, 4))
    dst = np.tanh(src) @ rng.normal(size=(4, 4))
    rep = distortion_arrays(src, dst)
    lo, hi = brute_distortion(src, dst)
    assert rep.lower == pytest.approx(lo, rel=1e-14) and rep.upper == pytest.approx(hi, rel=1e-14)
    i, j = rep.witness_lower
    assert np.linalg.norm(dst[i] - dst[j]) / np.linalg.norm(src[i] - src[j]) == rep.lower
    d_src = np.linalg.norm(src[:, None] - src[None], axis=2)
    d_dst = np.linalg.norm(dst[:, None] - dst[None], axis=2)
    iu = np.triu_indices(len(src), 1)
    assert np.all(rep.lower * d_src[iu] <= d_dst[iu] * (1 + 1e-12))
    assert np.all(d_dst[iu] <= rep.upper * d_src[iu] * (1 + 1e-12))


def test_distortion_isometry_invariant():
    rng = np.random.default_rng(4)
    src = rng.normal(size=(30, 3))
    dst = src ** 3
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    a, b = distortion_arrays(src, dst), distortion_arrays(src, dst @ Q.T + 7.0)
    assert abs(a.lower - b.lower) < 1e-10 and abs(a.upper - b.upper) < 1e-10


def test_sampled_map_pairing():
    src = PointCloud([[0.0], [1.0], [2.0]])
    dst = PointCloud([[10.0], [20.0], [30.0]])
    f = SampledMap(src, dst, [2, 0, 1])
    assert f.images.ravel().tolist() == [30.0, 10.0, 20.0]
    with pytest.raises(PreconditionError):
        SampledMap(src, dst, [0, 0, 1])
    with pytest.raises(PreconditionError):
        SampledMap(src, PointCloud([[1.0]]))
