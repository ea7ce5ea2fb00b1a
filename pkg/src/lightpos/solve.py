"""Position solvers: single-lamp multi-face closed form and least
squares, the m-reading multi-lamp generalization, and trilateration.

All single-lamp solving happens in the lamp-aligned solve frame (+z
anti-parallel to the central ray, receiver at the origin); the lamp
position in that frame is the unknown.  Residuals are relative,
(model - measured) / measured, matching the sensor's multiplicative
error structure.  Face planes are oriented so their coefficients dot
positively with the lamp position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import _kernels
from .geom import normalize_plane, solve_frame_basis
from .rss import EmissionProfile, LampModel

STATUS_UNIQUE = "unique"
STATUS_DEGENERATE = "degenerate"
STATUS_NO_CONVERGE = "no_converge"

# Readings below this fraction of a lamp's strongest reading are dropped:
# a nearly edge-on face contributes more error than constraint.
RSS_FLOOR_FRACTION = 0.01

INDEPENDENCE_TOL = 1e-6


@dataclass(frozen=True)
class Reading:
    """One extracted RSS amplitude with its sensing plane in the solve
    frame of the lamp that produced it."""

    plane: np.ndarray
    s: float
    lamp_id: int = 0
    face_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "plane", normalize_plane(self.plane))
        if self.s <= 0:
            raise ValueError("reading amplitude must be positive")


@dataclass(frozen=True)
class SolveResult:
    point: np.ndarray
    residual_rms: float
    status: str
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == STATUS_UNIQUE


@dataclass(frozen=True)
class LampSighting:
    """All readings of one lamp, strongest first."""

    lamp_id: int
    readings: tuple

    def __post_init__(self):
        readings = tuple(
            sorted(self.readings, key=lambda r: r.s, reverse=True)
        )
        if any(r.lamp_id != self.lamp_id for r in readings):
            raise ValueError("sighting mixes readings from several lamps")
        object.__setattr__(self, "readings", readings)


def model_rss(planes: np.ndarray, k: float, profile: EmissionProfile,
              point: np.ndarray) -> np.ndarray:
    """Forward model values for a lamp at ``point`` in the solve frame."""
    d = np.linalg.norm(point)
    cos_w = point[2] / d
    f = float(profile.value(math.acos(max(-1.0, min(1.0, cos_w)))))
    return k * (planes @ point) * f / d**3


def _relative_rms(planes, s, k, profile, point) -> float:
    r = (model_rss(planes, k, profile, point) - s) / s
    return float(np.sqrt(np.mean(r * r)))


def mflp_closed_form(r1: Reading, r2: Reading, r3: Reading,
                     k: float, profile: EmissionProfile) -> SolveResult:
    """Exact single-lamp solve from three readings on linearly
    independent planes.

    Dividing pairs of model equations cancels the distance and emission
    factors, leaving two homogeneous linear equations; the lamp direction
    is their null space, and the remaining scale follows from any one
    equation using z > 0.
    """
    readings = (r1, r2, r3)
    planes = np.array([r.plane for r in readings])
    s = np.array([r.s for r in readings])
    if abs(np.linalg.det(planes)) <= INDEPENDENCE_TOL:
        return SolveResult(np.full(3, np.nan), math.inf, STATUS_DEGENERATE)

    rows = planes / s[:, None]
    direction = np.cross(rows[0] - rows[1], rows[0] - rows[2])
    if np.linalg.norm(direction) < 1e-12 or abs(direction[2]) < 1e-12:
        return SolveResult(np.full(3, np.nan), math.inf, STATUS_DEGENERATE)
    if direction[2] < 0:
        direction = -direction
    c1, c2 = direction[0] / direction[2], direction[1] / direction[2]

    norm2 = 1.0 + c1 * c1 + c2 * c2
    cos_w = 1.0 / math.sqrt(norm2)
    f = float(profile.value(math.acos(cos_w)))
    dots = planes @ np.array([c1, c2, 1.0])
    if np.any(dots <= 0) or f <= 0:
        # Sign assumptions violated: the data is inconsistent with a lamp
        # in the solver's domain.
        return SolveResult(np.full(3, np.nan), math.inf, STATUS_DEGENERATE)
    z_sq = k * dots * f / (s * norm2 ** 1.5)
    z = math.sqrt(float(np.mean(z_sq)))
    point = np.array([c1 * z, c2 * z, z])
    return SolveResult(point, _relative_rms(planes, s, k, profile, point),
                       STATUS_UNIQUE)


def _strongest_independent_triple(readings):
    ordered = sorted(readings, key=lambda r: r.s, reverse=True)
    for triple in combinations(ordered, 3):
        planes = np.array([r.plane for r in triple])
        if abs(np.linalg.det(planes)) > INDEPENDENCE_TOL:
            return triple
    return None


def mflp_least_squares(readings, k: float, profile: EmissionProfile,
                       init=None, max_iter: int = 100,
                       step_tol: float = 1e-10) -> SolveResult:
    """Damped Gauss-Newton least squares over all readings of one lamp.

    Seeds from the closed form on the strongest independent plane triple
    unless an initial point is supplied.
    """
    readings = list(readings)
    if len(readings) < 3:
        raise ValueError("least squares needs at least three readings")
    planes = np.array([r.plane for r in readings])
    s = np.array([r.s for r in readings])

    if init is None:
        triple = _strongest_independent_triple(readings)
        if triple is None:
            return SolveResult(np.full(3, np.nan), math.inf, STATUS_DEGENERATE)
        seed = mflp_closed_form(*triple, k, profile)
        if seed.status != STATUS_UNIQUE:
            return seed
        init = seed.point
    init = np.asarray(init, dtype=float)
    if init[2] <= 0:
        raise ValueError("initial point must have z > 0 in the solve frame")

    kind, coeffs = profile.kernel_coding()
    x, y, z, rms, status, iters = _kernels.solve_single(
        planes, s, k, kind, coeffs, init[0], init[1], init[2],
        max_iter=max_iter, step_tol=step_tol,
    )
    point = np.array([x, y, z])
    out_status = STATUS_UNIQUE if status == 0 else STATUS_NO_CONVERGE
    return SolveResult(point, rms, out_status, iters)


def select_readings(sightings, m: int = 3):
    """Pick the readings to solve with.

    Per lamp, readings below 1% of that lamp's strongest reading are
    dropped and at most the three strongest are kept.  With m = 3 the
    lamp with the greatest top-three mean wins; with m > 3 the m highest
    surviving readings overall are returned.
    """
    if m < 3:
        raise ValueError("at least three readings are required to solve")
    kept = {}
    for sighting in sightings:
        if not sighting.readings:
            continue
        floor = RSS_FLOOR_FRACTION * sighting.readings[0].s
        survivors = [r for r in sighting.readings if r.s >= floor][:3]
        if len(survivors) >= 3:
            kept[sighting.lamp_id] = survivors
    if not kept:
        raise ValueError("no lamp has three readings above the RSS floor")
    if m == 3:
        best = max(kept.values(), key=lambda rs: np.mean([r.s for r in rs]))
        return list(best)
    pool = [r for rs in kept.values() for r in rs]
    pool.sort(key=lambda r: r.s, reverse=True)
    return pool[:m]


def to_world_position(lamp: LampModel, x_solve) -> np.ndarray:
    """Receiver world position from the lamp's solve-frame solution."""
    basis = solve_frame_basis(lamp.central_ray)
    return lamp.position - basis @ np.asarray(x_solve, dtype=float)


def solve_multi(readings, lamp_table, k_scale: float = 1.0,
                max_iter: int = 400, step_tol: float = 1e-10,
                ftol: float = 1e-8) -> SolveResult:
    """Joint least squares over the receiver's world position from
    readings of one or more lamps.

    Each reading's residual is computed through its own lamp's solve
    frame.  With a single lamp this delegates to the single-lamp
    pipeline, so the reduction is exact.
    """
    readings = list(readings)
    lamp_ids = sorted({r.lamp_id for r in readings})
    if len(lamp_ids) == 1:
        lamp = lamp_table[lamp_ids[0]]
        res = mflp_least_squares(readings, lamp.k * k_scale, lamp.profile,
                                 max_iter=max_iter, step_tol=step_tol)
        if res.status != STATUS_UNIQUE:
            return res
        return SolveResult(to_world_position(lamp, res.point),
                           res.residual_rms, res.status, res.iterations)

    bases = {i: solve_frame_basis(lamp_table[i].central_ray) for i in lamp_ids}
    by_lamp = {i: [r for r in readings if r.lamp_id == i] for i in lamp_ids}

    # Seed from the lamp with the strongest independent triple.
    seed = None
    for i in sorted(lamp_ids,
                    key=lambda j: -np.mean([r.s for r in by_lamp[j][:3]])):
        triple = _strongest_independent_triple(by_lamp[i])
        if triple is None:
            continue
        lamp = lamp_table[i]
        res = mflp_closed_form(*triple, lamp.k * k_scale, lamp.profile)
        if res.status == STATUS_UNIQUE:
            seed = to_world_position(lamp, res.point)
            break
    if seed is None:
        return SolveResult(np.full(3, np.nan), math.inf, STATUS_DEGENERATE)

    def residuals(p):
        r = np.empty(len(readings))
        jac = np.empty((len(readings), 3))
        for idx, rd in enumerate(readings):
            lamp = lamp_table[rd.lamp_id]
            basis = bases[rd.lamp_id]
            x = basis.T @ (lamp.position - p)
            if x[2] <= 0:
                return None, None
            d = np.linalg.norm(x)
            c = x[2] / d
            w = math.acos(max(-1.0, min(1.0, c)))
            k = lamp.k * k_scale
            f = float(lamp.profile.value(w))
            dot = rd.plane @ x
            m = k * dot * f / d**3
            r[idx] = (m - rd.s) / rd.s
            # Gradient of the model wrt x, then chain through x = B^T (L - p).
            if lamp.profile.kind == "cosine_power":
                g, dg = c ** lamp.profile.params[0], \
                    lamp.profile.params[0] * c ** (lamp.profile.params[0] - 1)
            else:
                dgdw = np.polynomial.polynomial.polyval(
                    w, [j * cj for j, cj in enumerate(lamp.profile.params)][1:]
                    or [0.0])
                g = f
                dg = -dgdw / math.sqrt(max(1 - c * c, 1e-18))
            dc_dx = np.array([0.0, 0.0, 1.0]) / d - x[2] * x / d**3
            grad_x = k * (rd.plane * g / d**3 + dot * dg * dc_dx / d**3
                          - 3 * dot * g * x / d**5)
            jac[idx] = -(basis @ grad_x) / rd.s
        return r, jac

    p = seed
    r, jac = residuals(p)
    if r is None:
        return SolveResult(np.full(3, np.nan), math.inf, STATUS_NO_CONVERGE)
    cost = float(r @ r)
    lam = 1e-3
    status = STATUS_NO_CONVERGE
    it = 0
    for it in range(1, max_iter + 1):
        step = np.linalg.solve(jac.T @ jac + lam * np.eye(3), -(jac.T @ r))
        trial = p + step
        r_t, jac_t = residuals(trial)
        if r_t is not None and float(r_t @ r_t) < cost:
            improved = cost - float(r_t @ r_t)
            p, r, jac, cost = trial, r_t, jac_t, float(r_t @ r_t)
            lam = max(lam * 0.1, 1e-15)
            if (np.linalg.norm(step) < step_tol
                    or improved <= ftol * max(cost, 1e-300)):
                status = STATUS_UNIQUE
                break
        else:
            lam *= 10.0
            if lam > 1e14:
                if np.linalg.norm(step) < step_tol:
                    status = STATUS_UNIQUE
                break
    return SolveResult(p, float(np.sqrt(cost / len(readings))), status, it)


def trilaterate(lamp_positions, k: float, profile: EmissionProfile,
                s, z_receiver=None, max_iter: int = 100,
                step_tol: float = 1e-10, ftol: float = 1e-8) -> SolveResult:
    """Solve a horizontal-face receiver position from three or more
    vertically hung lamps sharing one intensity model.

    With the sensing face horizontal the per-lamp model depends only on
    the height gap and distance, giving the classic three-sphere
    geometry; collinear lamps are rejected as degenerate.
    """
    lamps = np.asarray(lamp_positions, dtype=float)
    s = np.asarray(s, dtype=float)
    if len(lamps) < 3 or np.any(s <= 0):
        raise ValueError("need at least three lamps with positive readings")
    spread = np.linalg.norm(lamps - lamps.mean(axis=0), axis=1).max()
    area = 0.5 * np.linalg.norm(
        np.cross(lamps[1] - lamps[0], lamps[2] - lamps[0]))
    if area < 1e-9 * max(spread, 1.0) ** 2:
        return SolveResult(np.full(3, np.nan), math.inf, STATUS_DEGENERATE)

    z_fixed = z_receiver is not None
    z0 = float(z_receiver) if z_fixed else 0.0

    def invert_distance(dz, si):
        # s(d) = k * dz * f(acos(dz/d)) / d^3 decreases in d >= dz.
        lo, hi = dz * (1 + 1e-9), dz + 1.0
        def val(d):
            return k * dz * float(profile.value(math.acos(dz / d))) / d**3
        while val(hi) > si and hi < dz + 1e6:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if val(mid) > si:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    # Linear lateration seed from inverted ranges at the initial height.
    dz0 = lamps[:, 2] - z0
    if np.any(dz0 <= 0):
        raise ValueError("receiver must start below every lamp")
    d_est = np.array([invert_distance(dz0[i], s[i]) for i in range(len(s))])
    rows = 2 * (lamps[1:, :2] - lamps[0, :2])
    rhs = (d_est[0] ** 2 - d_est[1:] ** 2
           + np.sum(lamps[1:, :2] ** 2, axis=1)
           - np.sum(lamps[0, :2] ** 2)
           + dz0[1:] ** 2 - dz0[0] ** 2)
    xy, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    p = np.array([xy[0], xy[1], z0])

    def residuals(q):
        dz = lamps[:, 2] - q[2]
        if np.any(dz <= 0):
            return None
        delta = lamps - q
        d = np.linalg.norm(delta, axis=1)
        f = profile.value(np.arccos(np.clip(dz / d, -1.0, 1.0)))
        return (k * dz * f / d**3 - s) / s

    n_free = 2 if z_fixed else 3
    r = residuals(p)
    if r is None:
        return SolveResult(np.full(3, np.nan), math.inf, STATUS_NO_CONVERGE)
    cost = float(r @ r)
    lam = 1e-3
    status = STATUS_NO_CONVERGE
    it = 0
    eps = 1e-7
    for it in range(1, max_iter + 1):
        jac = np.empty((len(s), n_free))
        for j in range(n_free):
            dq = np.zeros(3)
            dq[j] = eps
            rp = residuals(p + dq)
            rm = residuals(p - dq)
            if rp is None or rm is None:
                rp = r if rp is None else rp
                rm = r if rm is None else rm
            jac[:, j] = (rp - rm) / (2 * eps)
        try:
            step = np.linalg.solve(jac.T @ jac + lam * np.eye(n_free),
                                   -(jac.T @ r))
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        trial = p.copy()
        trial[:n_free] += step
        r_t = residuals(trial)
        if r_t is not None and float(r_t @ r_t) < cost:
            improved = cost - float(r_t @ r_t)
            p, r, cost = trial, r_t, float(r_t @ r_t)
            lam = max(lam * 0.1, 1e-15)
            if (np.linalg.norm(step) < step_tol
                    or improved <= ftol * max(cost, 1e-300)):
                status = STATUS_UNIQUE
                break
        else:
            lam *= 10.0
            if lam > 1e14:
                if np.linalg.norm(step) < step_tol:
                    status = STATUS_UNIQUE
                break
    return SolveResult(p, float(np.sqrt(cost / len(s))), status, it)
