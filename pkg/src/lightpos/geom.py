"""Coordinate frames, attitude conversion, receiver face geometry and
line-of-sight tests.

Frame conventions used throughout the package:

* world frame: x north, y west, z up (right-handed).  Lamps hang at
  positive height, receivers sit below them.
* attitude/body frame: aircraft forward/right/down, with the reference
  (NED) frame x north, y east, z down.  ``attitude_to_rotation`` works in
  this convention; ``NED_TO_WORLD`` is the single fixed flip between the
  two frames.
* receiver-local frame: z up, used for the face normals of the receiver
  polyhedron.  ``receiver_rotation`` maps receiver-local to world and is
  the identity at zero attitude.
* solve frame: receiver-centered, +z anti-parallel to a lamp's central
  ray, so a vertically hung lamp sits straight "up" in it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# Fixed flip between NED (x north, y east, z down) and the world frame
# (x north, y west, z up).  The same flip maps receiver-local (z up) to
# the forward/right/down body frame.
NED_TO_WORLD = np.diag([1.0, -1.0, -1.0])
LOCAL_TO_BODY = np.diag([1.0, -1.0, -1.0])


class DegenerateGeometryError(ValueError):
    """Raised when an input configuration has no usable geometry."""


def unit(v) -> np.ndarray:
    """Return v normalized to unit length; reject near-zero vectors."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise DegenerateGeometryError("zero-length direction vector")
    return v / n


def normalize_plane(coeffs) -> np.ndarray:
    """Normalize plane coefficients (A, B, C) so A^2 + B^2 + C^2 = 1."""
    return unit(coeffs)


@dataclass(frozen=True)
class Attitude:
    """Receiver orientation as pitch/roll/heading in radians.

    pitch in [-pi/2, pi/2], roll in (-pi, pi], heading in [0, 2*pi).
    """

    pitch: float
    roll: float
    heading: float

    def __post_init__(self):
        if not -math.pi / 2 <= self.pitch <= math.pi / 2:
            raise ValueError(f"pitch {self.pitch} outside [-pi/2, pi/2]")
        if not -math.pi < self.roll <= math.pi:
            raise ValueError(f"roll {self.roll} outside (-pi, pi]")
        if not 0 <= self.heading < TWO_PI:
            raise ValueError(f"heading {self.heading} outside [0, 2*pi)")


def attitude_to_rotation(att: Attitude) -> np.ndarray:
    """Body-to-NED rotation matrix for the given attitude.

    Composition is intrinsic Z-Y-X: heading about the down axis, then
    pitch about the intermediate right axis, then roll about the forward
    axis (the aerospace standard).
    """
    cp, sp = math.cos(att.pitch), math.sin(att.pitch)
    cr, sr = math.cos(att.roll), math.sin(att.roll)
    ch, sh = math.cos(att.heading), math.sin(att.heading)
    return np.array(
        [
            [ch * cp, ch * sp * sr - sh * cr, ch * sp * cr + sh * sr],
            [sh * cp, sh * sp * sr + ch * cr, sh * sp * cr - ch * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def rotation_to_attitude(rot: np.ndarray) -> Attitude:
    """Recover pitch/roll/heading from a body-to-NED rotation matrix.

    Valid away from gimbal lock (|pitch| < pi/2).
    """
    pitch = -math.asin(max(-1.0, min(1.0, rot[2, 0])))
    roll = math.atan2(rot[2, 1], rot[2, 2])
    heading = math.atan2(rot[1, 0], rot[0, 0]) % TWO_PI
    return Attitude(pitch, roll, heading)


def receiver_rotation(att: Attitude) -> np.ndarray:
    """Receiver-local (z up) to world (z up) rotation; identity at zero
    attitude."""
    return NED_TO_WORLD @ attitude_to_rotation(att) @ LOCAL_TO_BODY


@dataclass(frozen=True)
class Polyhedron:
    """Receiver face geometry: unit outward normals and face centroid
    offsets from the receiver origin, in the receiver-local z-up frame."""

    edge_length: float
    normals: np.ndarray = field(repr=False)   # (n, 3)
    centroids: np.ndarray = field(repr=False)  # (n, 3)

    @property
    def n_faces(self) -> int:
        return len(self.normals)


def half_dodecahedron(edge_length: float) -> Polyhedron:
    """Upper half of a regular dodecahedron: a top face with vertical
    normal plus five faces tilted arctan(2) from vertical, azimuths 72
    degrees apart.  Face centroids sit at the dodecahedron inradius."""
    if edge_length <= 0:
        raise ValueError("edge length must be positive")
    theta = math.atan(2.0)  # supplement of the 116.565-degree dihedral
    inradius = 0.5 * edge_length * math.sqrt((25 + 11 * math.sqrt(5)) / 10)
    normals = [np.array([0.0, 0.0, 1.0])]
    for i in range(5):
        phi = TWO_PI * i / 5
        normals.append(
            np.array(
                [
                    math.sin(theta) * math.cos(phi),
                    math.sin(theta) * math.sin(phi),
                    math.cos(theta),
                ]
            )
        )
    normals = np.array(normals)
    return Polyhedron(edge_length, normals, inradius * normals)


def tri_face_min_distance(edge_length: float) -> float:
    """Distance beyond which any point sees at least three faces of a
    regular dodecahedron of the given edge length (about 2.49x the edge)."""
    if edge_length <= 0:
        raise ValueError("edge length must be positive")
    s5 = math.sqrt(5.0)
    return (
        math.sqrt(1 + 0.4 * s5) + 0.5 * math.sqrt(2.5 + 1.1 * s5)
    ) * edge_length


def visible_faces(poly: Polyhedron, direction) -> list[int]:
    """Indices of faces whose outward normal points strictly toward the
    given unit direction.

    For a convex polyhedron viewed from beyond ``tri_face_min_distance``
    this half-space test equals geometric line-of-sight visibility.
    """
    d = unit(direction)
    dots = poly.normals @ d
    return [i for i in range(poly.n_faces) if dots[i] > 0.0]


def linearly_independent(p1, p2, p3, tol: float = 1e-6) -> bool:
    """Whether three normalized sensing planes span R^3 (|det| above tol)."""
    m = np.array([normalize_plane(p1), normalize_plane(p2), normalize_plane(p3)])
    return abs(np.linalg.det(m)) > tol


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box obstacle, min/max corners in meters."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if np.any(self.lo > self.hi):
            raise ValueError("box min corner exceeds max corner")

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))


def _segment_hits_box(p: np.ndarray, q: np.ndarray, box: Aabb) -> bool:
    # Slab method on the open segment (endpoints touching a box face do
    # not count as occlusion).
    d = q - p
    tmin, tmax = 0.0, 1.0
    for i in range(3):
        if abs(d[i]) < 1e-15:
            if p[i] < box.lo[i] or p[i] > box.hi[i]:
                return False
            continue
        t1 = (box.lo[i] - p[i]) / d[i]
        t2 = (box.hi[i] - p[i]) / d[i]
        if t1 > t2:
            t1, t2 = t2, t1
        tmin = max(tmin, t1)
        tmax = min(tmax, t2)
        if tmin > tmax:
            return False
    return tmax - tmin > 1e-12


def line_of_sight(p, q, obstacles) -> bool:
    """True when the open segment p-q is not blocked by any box."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.allclose(p, q):
        raise ValueError("line_of_sight endpoints coincide")
    return not any(_segment_hits_box(p, q, box) for box in obstacles)


def solve_frame_basis(central_ray) -> np.ndarray:
    """Orthonormal basis of the lamp-aligned solve frame, as columns in
    world coordinates.  +z opposes the lamp's central ray; +x is the
    world x axis projected into the frame's horizontal plane (world y as
    fallback when the ray is along x)."""
    e3 = -unit(central_ray)
    ref = np.array([1.0, 0.0, 0.0])
    if abs(e3 @ ref) > 1.0 - 1e-9:
        ref = np.array([0.0, 1.0, 0.0])
    e1 = unit(ref - (ref @ e3) * e3)
    e2 = np.cross(e3, e1)
    return np.column_stack([e1, e2, e3])


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    for c in v:
        if abs(c) > 1e-12:
            return v if c > 0 else -v
    return v


def solve_frame_plane(face_normal_body, att: Attitude, central_ray,
                      toward=None) -> np.ndarray:
    """Express a body-frame face normal as normalized sensing-plane
    coefficients in the lamp-aligned solve frame.

    ``toward``, when given, is the world-frame direction from the face to
    the lamp; the sign is then chosen so the coefficients dot positively
    with the lamp position, matching the solver's convention.  Otherwise
    the sign is canonicalized (first nonzero component of (C, A, B)
    positive, preferring +z).
    """
    n_world = NED_TO_WORLD @ attitude_to_rotation(att) @ unit(face_normal_body)
    basis = solve_frame_basis(central_ray)
    n_solve = basis.T @ n_world
    if toward is not None:
        t_solve = basis.T @ unit(toward)
        s = n_solve @ t_solve
        if s < 0:
            n_solve = -n_solve
        return normalize_plane(n_solve)
    v = _canonical_sign(np.array([n_solve[2], n_solve[0], n_solve[1]]))
    return normalize_plane(np.array([v[1], v[2], v[0]]))
