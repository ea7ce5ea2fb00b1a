"""Scenario modeling, measurement generation with noise, batch and
trajectory evaluation, stability metrics, and deployment-cost analysis.

All randomness is drawn from per-point seeded generators (seed combined
with the point/trial index), so identical scenario + seed pairs always
reproduce bit-identical results regardless of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .geom import (
    Aabb,
    Attitude,
    Polyhedron,
    half_dodecahedron,
    line_of_sight,
    receiver_rotation,
    solve_frame_basis,
)
from .signal import (
    OOK_FUNDAMENTAL,
    SHAPE_DC,
    SHAPE_SQUARE_OOK,
    WaveComponent,
    extract_amplitude,
    synthesize_trace,
)
from .solve import (
    LampSighting,
    Reading,
    STATUS_UNIQUE,
    SolveResult,
    STATUS_DEGENERATE,
    mflp_least_squares,
    select_readings,
    solve_multi,
    to_world_position,
    trilaterate,
)

MODE_FAST = "fast"
MODE_END_TO_END = "end_to_end"

PIPELINE_MFLP = "mflp"
PIPELINE_TRILATERATION = "trilateration"
PIPELINE_MULTI = "multi"

METHOD_MFLP = "mflp"
METHOD_TRILATERATION = "trilateration"

# Trilateration geometry guards: lamps closer than this or spanning less
# triangle area give ill-conditioned or ambiguous fixes.
MIN_LAMP_SEPARATION = 1.0
MIN_TRIANGLE_AREA = 0.5


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement perturbations: multiplicative RSS factor (1 +/- eps),
    additive uniform heading error, Gaussian pitch/roll error, and trace
    noise for end-to-end mode."""

    rss_epsilon: float = 0.0
    heading_epsilon: float = 0.0
    accel_sd: float = 0.0
    trace_noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rss_epsilon <= 0.2:
            raise ValueError("rss_epsilon outside [0, 0.2]")
        if self.heading_epsilon < 0 or self.accel_sd < 0 or self.trace_noise_sd < 0:
            raise ValueError("noise magnitudes must be nonnegative")


@dataclass(frozen=True)
class ReceiverSpec:
    polyhedron: Polyhedron
    base_height: float = 0.0

    @classmethod
    def default(cls, edge_length: float = 0.05, base_height: float = 0.0):
        return cls(half_dodecahedron(edge_length), base_height)


@dataclass(frozen=True)
class Scenario:
    bounds: Aabb
    obstacles: tuple
    lamps: tuple
    receiver: ReceiverSpec
    noise: NoiseSpec = NoiseSpec()
    saturation: float = 1000.0
    ambient_dc: float = 850.0
    sample_rate_hz: float = 640.0
    window_s: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "lamps", tuple(self.lamps))
        freqs = [l.flash_hz for l in self.lamps]
        resolution = 1.0 / self.window_s
        for i, fi in enumerate(freqs):
            for fj in freqs[i + 1:]:
                if abs(fi - fj) <= resolution:
                    raise ValueError(
                        f"lamp frequencies {fi} and {fj} Hz not resolvable "
                        f"in a {self.window_s} s window"
                    )
        for lamp in self.lamps:
            if not self.bounds.contains(lamp.position):
                raise ValueError("lamp outside scenario bounds")


@dataclass(frozen=True)
class MeasurementSet:
    """Extracted per-(lamp, face) amplitudes with solve-frame planes.

    Amplitudes are flash-fundamental values, i.e. (2/pi) x model RSS;
    ``k_scale`` carries that factor so solvers can use k_eff = k * k_scale.
    """

    readings: tuple
    attitude: Attitude
    k_scale: float = OOK_FUNDAMENTAL
    saturated_faces: tuple = ()


@dataclass(frozen=True)
class ErrorStats:
    median: float
    mean: float
    max: float
    stdev: float
    count: int = 0
    failures: int = 0

    @classmethod
    def from_errors(cls, errors, failures: int = 0):
        errors = np.asarray(errors, dtype=float)
        if len(errors) == 0:
            return cls(0.0, 0.0, 0.0, 0.0, 0, failures)
        return cls(
            float(np.median(errors)),
            float(np.mean(errors)),
            float(np.max(errors)),
            float(np.std(errors)),
            len(errors),
            failures,
        )


@dataclass(frozen=True)
class Fix:
    time_s: float
    true_position: np.ndarray
    estimate: np.ndarray
    status: str

    @property
    def error(self) -> float:
        return float(np.linalg.norm(self.estimate - self.true_position))


@dataclass(frozen=True)
class CoverageReport:
    method: str
    fraction: float
    uncovered_cells: tuple
    lamp_count: int


def _measured_attitude(att: Attitude, noise: NoiseSpec, rng) -> Attitude:
    if noise.heading_epsilon == 0 and noise.accel_sd == 0:
        return att
    heading = (att.heading + rng.uniform(-noise.heading_epsilon,
                                         noise.heading_epsilon)) % (2 * math.pi)
    pitch = att.pitch + (rng.normal(0, noise.accel_sd) if noise.accel_sd else 0.0)
    roll = att.roll + (rng.normal(0, noise.accel_sd) if noise.accel_sd else 0.0)
    pitch = max(-math.pi / 2, min(math.pi / 2, pitch))
    if roll <= -math.pi:
        roll += 2 * math.pi
    elif roll > math.pi:
        roll -= 2 * math.pi
    return Attitude(pitch, roll, heading)


def measure(scn: Scenario, position, attitude: Attitude = Attitude(0, 0, 0),
            mode: str = MODE_FAST, rng=None) -> MeasurementSet:
    """Simulate one measurement epoch at a receiver pose.

    Per lamp x face: line-of-sight check to the face centroid, forward
    RSS, then either the direct flash-fundamental amplitude with
    multiplicative noise (fast) or waveform synthesis plus single-bin
    extraction (end_to_end).  Saturated faces are flagged and excluded.
    """
    position = np.asarray(position, dtype=float)
    if not scn.bounds.contains(position):
        raise ValueError(f"receiver pose {position} outside scenario bounds")
    if rng is None:
        rng = np.random.default_rng(scn.noise.seed)

    rot_true = receiver_rotation(attitude)
    att_meas = _measured_attitude(attitude, scn.noise, rng)
    rot_meas = receiver_rotation(att_meas)

    poly = scn.receiver.polyhedron
    centers = position + poly.centroids @ rot_true.T
    normals_true = poly.normals @ rot_true.T
    normals_meas = poly.normals @ rot_meas.T

    # Raw model RSS per (lamp, face); zero when occluded or back-lit.
    # Faces share the receiver origin in the model (the face planes pass
    # through it); centroids are used for occlusion realism only.
    rss = np.zeros((len(scn.lamps), poly.n_faces))
    for li, lamp in enumerate(scn.lamps):
        delta = lamp.position - position
        d = float(np.linalg.norm(delta))
        cos_w = float((-delta / d) @ lamp.central_ray)
        if cos_w <= 0:
            continue
        incidence = normals_true @ delta
        lit = incidence > 0
        for fi in np.nonzero(lit)[0]:
            if not line_of_sight(lamp.position, centers[fi], scn.obstacles):
                lit[fi] = False
        f = float(lamp.profile.value(math.acos(min(1.0, cos_w))))
        rss[li] = np.where(lit, lamp.k / d**3 * incidence * f, 0.0)

    saturated = tuple(
        fi for fi in range(poly.n_faces)
        if scn.ambient_dc + rss[:, fi].sum() > scn.saturation
    )

    if mode == MODE_FAST:
        eps = scn.noise.rss_epsilon
        signs = rng.integers(0, 2, size=rss.shape) * 2 - 1
        amps = OOK_FUNDAMENTAL * rss * (1.0 + eps * signs)
    elif mode == MODE_END_TO_END:
        amps = np.zeros_like(rss)
        for fi in range(poly.n_faces):
            components = [WaveComponent(0.0, scn.ambient_dc, SHAPE_DC)]
            for li, lamp in enumerate(scn.lamps):
                if rss[li, fi] > 0:
                    components.append(
                        WaveComponent(lamp.flash_hz, rss[li, fi], SHAPE_SQUARE_OOK)
                    )
            trace = synthesize_trace(
                components, scn.sample_rate_hz, scn.window_s,
                scn.noise.trace_noise_sd, seed=rng.integers(2**63),
            )
            for li, lamp in enumerate(scn.lamps):
                if rss[li, fi] > 0:
                    amps[li, fi] = extract_amplitude(trace, lamp.flash_hz)
    else:
        raise ValueError(f"unknown measurement mode {mode!r}")

    readings = []
    for li, lamp in enumerate(scn.lamps):
        basis = solve_frame_basis(lamp.central_ray)
        n_solve = normals_meas @ basis
        for fi in range(poly.n_faces):
            if fi in saturated or amps[li, fi] <= 0 or rss[li, fi] <= 0:
                continue
            plane = n_solve[fi]
            toward = basis.T @ (lamp.position - centers[fi])
            if plane @ toward < 0:
                plane = -plane
            readings.append(Reading(plane, float(amps[li, fi]), li, fi))
    return MeasurementSet(tuple(readings), att_meas,
                          OOK_FUNDAMENTAL, saturated)


def sightings_from(mset: MeasurementSet):
    by_lamp = {}
    for r in mset.readings:
        by_lamp.setdefault(r.lamp_id, []).append(r)
    return [LampSighting(i, tuple(rs)) for i, rs in sorted(by_lamp.items())]


def locate(scn: Scenario, mset: MeasurementSet, pipeline: str = PIPELINE_MFLP,
           m: int = 3, z_receiver=None) -> SolveResult:
    """Run the selected position pipeline on one measurement set,
    returning a world-frame result."""
    sightings = sightings_from(mset)
    if pipeline == PIPELINE_MFLP:
        chosen = select_readings(sightings, 3)
        lamp = scn.lamps[chosen[0].lamp_id]
        res = mflp_least_squares(chosen, lamp.k * mset.k_scale, lamp.profile)
        if res.status != STATUS_UNIQUE:
            return res
        return SolveResult(to_world_position(lamp, res.point),
                           res.residual_rms, res.status, res.iterations)
    if pipeline == PIPELINE_MULTI:
        chosen = select_readings(sightings, m)
        return solve_multi(chosen, {i: scn.lamps[i] for i in
                                    {r.lamp_id for r in chosen}},
                           k_scale=mset.k_scale)
    if pipeline == PIPELINE_TRILATERATION:
        # One horizontal sensor: use the top face (index 0) per lamp.
        top = {r.lamp_id: r.s for r in mset.readings if r.face_id == 0}
        if len(top) < 3:
            return SolveResult(np.full(3, np.nan), math.inf, STATUS_DEGENERATE)
        ids = sorted(top, key=top.get, reverse=True)[:3]
        lamp0 = scn.lamps[ids[0]]
        return trilaterate(
            [scn.lamps[i].position for i in ids],
            lamp0.k * mset.k_scale, lamp0.profile,
            [top[i] for i in ids],
            z_receiver=z_receiver,
        )
    raise ValueError(f"unknown pipeline {pipeline!r}")


def _point_rng(seed, *indices):
    return np.random.default_rng((int(seed),) + tuple(int(i) for i in indices))


def run_static(scn: Scenario, points, pipeline: str = PIPELINE_MFLP,
               m: int = 3, mode: str = MODE_FAST, seed=None,
               attitude: Attitude = Attitude(0, 0, 0)):
    """Measure and solve at each point; returns (fixes, ErrorStats).

    Per-point failures (no coverage, degenerate, no convergence) are
    reported in the fix list and excluded from the statistics.
    """
    if seed is None:
        seed = scn.noise.seed
    fixes = []
    errors = []
    failures = 0
    for i, p in enumerate(points):
        p = np.asarray(p, dtype=float)
        rng = _point_rng(seed, i)
        try:
            mset = measure(scn, p, attitude, mode, rng)
            z = p[2] if pipeline == PIPELINE_TRILATERATION else None
            res = locate(scn, mset, pipeline, m, z_receiver=z)
        except ValueError:
            res = SolveResult(np.full(3, np.nan), math.inf, STATUS_DEGENERATE)
        fixes.append(Fix(float(i), p, res.point, res.status))
        if res.status == STATUS_UNIQUE:
            errors.append(float(np.linalg.norm(res.point - p)))
        else:
            failures += 1
    return fixes, ErrorStats.from_errors(errors, failures)


def sample_trajectory(waypoints, speed: float, interval_s: float):
    """Positions every interval_s seconds along a piecewise-linear path."""
    waypoints = [np.asarray(w, dtype=float) for w in waypoints]
    if interval_s <= 0 or speed <= 0:
        raise ValueError("speed and interval must be positive")
    if len(waypoints) == 1:
        return [(0.0, waypoints[0])]
    legs = list(zip(waypoints[:-1], waypoints[1:]))
    total = sum(np.linalg.norm(b - a) for a, b in legs)
    out = []
    t = 0.0
    while t * speed <= total + 1e-12:
        dist = t * speed
        acc = 0.0
        for li, (a, b) in enumerate(legs):
            leg = np.linalg.norm(b - a)
            if dist <= acc + leg or li == len(legs) - 1:
                frac = 0.0 if leg == 0 else min((dist - acc) / leg, 1.0)
                out.append((t, a + frac * (b - a)))
                break
            acc += leg
        t += interval_s
    return out


def run_trajectory(scn: Scenario, waypoints, speed: float, interval_s: float,
                   pipeline: str = PIPELINE_MFLP, m: int = 3,
                   mode: str = MODE_FAST, seed=None,
                   attitude: Attitude = Attitude(0, 0, 0)):
    """Static pipeline at every sampled pose of a piecewise-linear path."""
    samples = sample_trajectory(waypoints, speed, interval_s)
    if seed is None:
        seed = scn.noise.seed
    fixes = []
    for i, (t, p) in enumerate(samples):
        if not scn.bounds.contains(p):
            raise ValueError("trajectory leaves scenario bounds")
        rng = _point_rng(seed, i)
        try:
            mset = measure(scn, p, attitude, mode, rng)
            z = p[2] if pipeline == PIPELINE_TRILATERATION else None
            res = locate(scn, mset, pipeline, m, z_receiver=z)
        except ValueError:
            res = SolveResult(np.full(3, np.nan), math.inf, STATUS_DEGENERATE)
        fixes.append(Fix(t, p, res.point, res.status))
    return fixes


def oscillation_distance(points) -> float:
    """Mean distance of repeated fixes from their centroid."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least two fixes")
    centroid = pts.mean(axis=0)
    return float(np.mean(np.linalg.norm(pts - centroid, axis=1)))


def sensitivity_sweep(scn: Scenario, points, eps_grid, eps_h_grid,
                      trials: int, pipeline: str = PIPELINE_MFLP,
                      mode: str = MODE_FAST, seed=None):
    """Full factorial perturbation sweep; ``trials`` repeats per point
    and cell, all independently seeded.

    Returns (rows, mean_monotone) where rows are
    (eps, eps_h, ErrorStats) and mean_monotone reports whether the mean
    error is non-decreasing in eps at every fixed eps_h.
    """
    if seed is None:
        seed = scn.noise.seed
    rows = []
    for ci, eps_h in enumerate(eps_h_grid):
        for cj, eps in enumerate(eps_grid):
            noisy = replace(scn, noise=replace(
                scn.noise, rss_epsilon=eps, heading_epsilon=eps_h))
            errors = []
            failures = 0
            for t in range(trials):
                for i, p in enumerate(points):
                    rng = _point_rng(seed, ci, cj, t, i)
                    try:
                        mset = measure(noisy, p, Attitude(0, 0, 0), mode, rng)
                        res = locate(noisy, mset, pipeline)
                    except ValueError:
                        failures += 1
                        continue
                    if res.status == STATUS_UNIQUE:
                        errors.append(
                            float(np.linalg.norm(res.point - np.asarray(p))))
                    else:
                        failures += 1
            rows.append((eps, eps_h, ErrorStats.from_errors(errors, failures)))
    monotone = True
    for eps_h in eps_h_grid:
        means = [st.mean for e, h, st in rows if h == eps_h]
        if any(b < a - 1e-12 for a, b in zip(means, means[1:])):
            monotone = False
    return rows, monotone


def _visible_lamps(cell, lamps, obstacles):
    out = []
    for i, lamp in enumerate(lamps):
        d = np.linalg.norm(lamp.position - cell)
        if d <= lamp.range_m and line_of_sight(lamp.position, cell, obstacles):
            out.append(i)
    return out


def _has_valid_triple(visible_ids, lamps,
                      min_separation=MIN_LAMP_SEPARATION,
                      min_area=MIN_TRIANGLE_AREA) -> bool:
    if len(visible_ids) < 3:
        return False
    pos = [lamps[i].position for i in visible_ids]
    for a, b, c in combinations(range(len(pos)), 3):
        pa, pb, pc = pos[a], pos[b], pos[c]
        if (np.linalg.norm(pb - pa) < min_separation
                or np.linalg.norm(pc - pa) < min_separation
                or np.linalg.norm(pc - pb) < min_separation):
            continue
        if 0.5 * np.linalg.norm(np.cross(pb - pa, pc - pa)) >= min_area:
            return True
    return False


def grid_cells(bounds: Aabb, cell_size: float, height: float):
    """Cell-center grid over the floorplan at the receiver height."""
    if cell_size <= 0:
        raise ValueError("cell size must be positive")
    xs = np.arange(bounds.lo[0] + cell_size / 2, bounds.hi[0], cell_size)
    ys = np.arange(bounds.lo[1] + cell_size / 2, bounds.hi[1], cell_size)
    return [np.array([x, y, height]) for x in xs for y in ys]


def _cell_blocked(cell, obstacles) -> bool:
    return any(box.contains(cell) for box in obstacles)


def coverage_analysis(bounds: Aabb, obstacles, lamps, method: str,
                      cell_size: float = 0.3,
                      receiver_height: float = 0.0) -> CoverageReport:
    """Fraction of floor cells positionable by the given method.

    A cell counts as covered for the multi-face method when one lamp sees
    it (the half-dodecahedron receiver then guarantees three usable
    faces), and for trilateration when three sufficiently separated,
    non-collinear lamps see it.
    """
    cells = [c for c in grid_cells(bounds, cell_size, receiver_height)
             if not _cell_blocked(c, obstacles)]
    uncovered = []
    for cell in cells:
        vis = _visible_lamps(cell, lamps, obstacles)
        if method == METHOD_MFLP:
            ok = len(vis) >= 1
        elif method == METHOD_TRILATERATION:
            ok = _has_valid_triple(vis, lamps)
        else:
            raise ValueError(f"unknown coverage method {method!r}")
        if not ok:
            uncovered.append(tuple(cell))
    fraction = 1.0 - len(uncovered) / len(cells) if cells else 0.0
    return CoverageReport(method, fraction, tuple(uncovered), len(lamps))


def greedy_min_lamps(bounds: Aabb, obstacles, candidates, method: str,
                     cell_size: float = 0.3, receiver_height: float = 0.0):
    """Greedy max-coverage lamp placement until full coverage.

    Ties break by candidate order (then by progress toward three visible
    lamps per cell for trilateration).  Returns (count, chosen indices,
    uncovered cell count); a nonzero shortfall means full coverage is
    unattainable with the given candidates.
    """
    cells = [c for c in grid_cells(bounds, cell_size, receiver_height)
             if not _cell_blocked(c, obstacles)]
    vis = np.zeros((len(candidates), len(cells)), dtype=bool)
    for ci, cand in enumerate(candidates):
        for ki, cell in enumerate(cells):
            d = np.linalg.norm(cand.position - cell)
            vis[ci, ki] = d <= cand.range_m and line_of_sight(
                cand.position, cell, obstacles)

    need = 1 if method == METHOD_MFLP else 3
    chosen: list[int] = []
    covered = np.zeros(len(cells), dtype=bool)

    def cell_covered(ki, lamp_ids):
        visible = [i for i in lamp_ids if vis[i, ki]]
        if method == METHOD_MFLP:
            return len(visible) >= 1
        return _has_valid_triple(visible, candidates)

    while not covered.all() and len(chosen) < len(candidates):
        best = None
        for ci in range(len(candidates)):
            if ci in chosen:
                continue
            trial = chosen + [ci]
            gain = 0
            progress = 0
            for ki in np.nonzero(~covered)[0]:
                if not vis[ci, ki]:
                    continue
                n_before = sum(1 for i in chosen if vis[i, ki])
                progress += max(0, min(need, n_before + 1) - min(need, n_before))
                if not cell_covered(ki, chosen) and cell_covered(ki, trial):
                    gain += 1
            score = (gain, progress, -ci)
            if best is None or score > best[0]:
                best = (score, ci)
        if best is None or best[0][:2] == (0, 0):
            break  # no candidate makes progress
        chosen.append(best[1])
        for ki in np.nonzero(~covered)[0]:
            if cell_covered(ki, chosen):
                covered[ki] = True
    shortfall = int((~covered).sum())
    return len(chosen), chosen, shortfall
