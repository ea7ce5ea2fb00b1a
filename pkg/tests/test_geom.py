"""Geometry: attitude conversions, receiver faces, visibility, LOS."""

import math

import numpy as np
import pytest

from lightpos.geom import (
    Aabb,
    Attitude,
    DegenerateGeometryError,
    attitude_to_rotation,
    half_dodecahedron,
    line_of_sight,
    linearly_independent,
    normalize_plane,
    receiver_rotation,
    rotation_to_attitude,
    solve_frame_basis,
    solve_frame_plane,
    tri_face_min_distance,
    unit,
    visible_faces,
)


def test_unit_rejects_zero_vector():
    with pytest.raises(DegenerateGeometryError):
        unit([0.0, 0.0, 0.0])


def test_normalize_plane():
    p = normalize_plane([3.0, 0.0, 4.0])
    assert np.allclose(p, [0.6, 0.0, 0.8])


def test_attitude_validation():
    with pytest.raises(ValueError):
        Attitude(2.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        Attitude(0.0, 4.0, 0.0)
    with pytest.raises(ValueError):
        Attitude(0.0, 0.0, -0.1)


def test_attitude_rotation_is_orthonormal_and_invertible():
    rng = np.random.default_rng(1)
    for _ in range(200):
        att = Attitude(
            rng.uniform(-1.4, 1.4), rng.uniform(-3.0, 3.0),
            rng.uniform(0.0, 2 * math.pi - 1e-6),
        )
        rot = attitude_to_rotation(att)
        assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(rot) == pytest.approx(1.0)
        back = rotation_to_attitude(rot)
        assert back.pitch == pytest.approx(att.pitch, abs=1e-12)
        assert back.roll == pytest.approx(att.roll, abs=1e-12)
        assert back.heading == pytest.approx(att.heading, abs=1e-12)


def test_heading_rotation_oracle():
    # Facing east (heading 90 deg): the body forward axis points east.
    rot = attitude_to_rotation(Attitude(0.0, 0.0, math.pi / 2))
    forward_ned = rot @ np.array([1.0, 0.0, 0.0])
    assert np.allclose(forward_ned, [0.0, 1.0, 0.0], atol=1e-12)


def test_receiver_rotation_identity_at_zero_attitude():
    assert np.allclose(receiver_rotation(Attitude(0, 0, 0)), np.eye(3))


def test_receiver_rotation_heading_only_spins_about_vertical():
    rot = receiver_rotation(Attitude(0.0, 0.0, math.pi / 2))
    assert np.allclose(rot @ [0, 0, 1], [0, 0, 1], atol=1e-12)
    # A quarter turn of heading moves the local +x axis.
    moved = rot @ np.array([1.0, 0.0, 0.0])
    assert abs(moved @ np.array([1.0, 0.0, 0.0])) < 1e-12


def test_half_dodecahedron_shape():
    poly = half_dodecahedron(1.0)
    assert poly.n_faces == 6
    assert np.allclose(poly.normals[0], [0, 0, 1])
    assert np.allclose(np.linalg.norm(poly.normals, axis=1), 1.0)
    # Side faces tilt arctan(2) from vertical, 72 degrees apart.
    for i in range(1, 6):
        assert poly.normals[i][2] == pytest.approx(math.cos(math.atan(2.0)))
    # [DERIVED] dodecahedron inradius for a = 1.
    inradius = 0.5 * math.sqrt((25 + 11 * math.sqrt(5)) / 10)
    assert np.allclose(np.linalg.norm(poly.centroids, axis=1), inradius)


def test_half_dodecahedron_scales_linearly():
    small, big = half_dodecahedron(0.05), half_dodecahedron(0.10)
    assert np.allclose(2 * small.centroids, big.centroids)
    assert np.allclose(small.normals, big.normals)


def test_tri_face_min_distance_value():
    # [DERIVED] (sqrt(1 + 0.4*sqrt(5)) + 0.5*sqrt(2.5 + 1.1*sqrt(5))) * a
    assert tri_face_min_distance(1.0) == pytest.approx(2.4899, abs=5e-4)
    assert tri_face_min_distance(2.0) == pytest.approx(
        2 * tri_face_min_distance(1.0))


def test_visible_faces_straight_up_sees_top_and_all_sides():
    poly = half_dodecahedron(1.0)
    assert visible_faces(poly, [0, 0, 1]) == [0, 1, 2, 3, 4, 5]


def test_visible_faces_any_upward_direction_sees_three():
    poly = half_dodecahedron(1.0)
    rng = np.random.default_rng(7)
    for _ in range(2000):
        d = rng.normal(size=3)
        d[2] = abs(d[2]) + 1e-9
        assert len(visible_faces(poly, d)) >= 3


def test_linear_independence():
    assert linearly_independent([1, 0, 0], [0, 1, 0], [0, 0, 1])
    assert not linearly_independent([1, 0, 0], [0, 1, 0], [1, 2, 0])


def test_aabb_contains_and_validation():
    box = Aabb([0, 0, 0], [1, 2, 3])
    assert box.contains([0.5, 1.0, 3.0])
    assert not box.contains([1.5, 1.0, 1.0])
    with pytest.raises(ValueError):
        Aabb([1, 0, 0], [0, 1, 1])


def test_line_of_sight_blocked_and_clear():
    wall = Aabb([2, -1, 0], [2.2, 1, 3])
    assert not line_of_sight([0, 0, 1], [4, 0, 1], [wall])
    assert line_of_sight([0, 0, 1], [1, 0, 1], [wall])
    # Passing above the wall is clear.
    assert line_of_sight([0, 0, 4], [4, 0, 4], [wall])


def test_line_of_sight_endpoint_touch_is_not_occlusion():
    box = Aabb([1, 0, 0], [2, 1, 1])
    # Segment ends exactly on a box face.
    assert line_of_sight([0, 0.5, 0.5], [1, 0.5, 0.5], [box])


def test_line_of_sight_rejects_coincident_endpoints():
    with pytest.raises(ValueError):
        line_of_sight([1, 1, 1], [1, 1, 1], [])


def test_solve_frame_basis_vertical_lamp_is_identity():
    assert np.allclose(solve_frame_basis([0, 0, -1]), np.eye(3))


def test_solve_frame_basis_orthonormal_for_any_ray():
    rng = np.random.default_rng(3)
    for _ in range(100):
        ray = rng.normal(size=3)
        basis = solve_frame_basis(ray)
        assert np.allclose(basis.T @ basis, np.eye(3), atol=1e-12)
        assert np.allclose(basis[:, 2], -ray / np.linalg.norm(ray))
        assert np.linalg.det(basis) == pytest.approx(1.0)


def test_solve_frame_plane_top_face_level_receiver():
    plane = solve_frame_plane([0, 0, 1], Attitude(0, 0, 0), [0, 0, -1])
    assert np.allclose(plane, [0, 0, 1], atol=1e-12)


def test_solve_frame_plane_sign_follows_lamp_direction():
    # Tilted face with the lamp on the opposite side of its plane.
    plane = solve_frame_plane([1, 0, 0], Attitude(0, 0, 0), [0, 0, -1],
                              toward=[-2.0, 0.0, 5.0])
    assert plane @ np.array([-2.0, 0.0, 5.0]) > 0
