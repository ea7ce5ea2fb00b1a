"""Command-line interface.

Exit codes: 0 on success, 1 for input or validation errors, 2 when the
requested solve fails (degenerate geometry or non-convergence above the
allowed fraction).  Outputs are byte-stable for a fixed scenario and
seed; the default seed is the scenario file's ``noise.seed`` (0 when
unset).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .compass import MagSample, calibrate_heading, fit_ellipse
from .report import (
    STATS_COLUMNS,
    envelope,
    fmt,
    render_csv,
    render_json,
    stats_row,
    write_csv,
    write_json,
)
from .rss import make_profile
from .scenario import ScenarioFormatError, load_scenario
from .sim import (
    ErrorStats,
    coverage_analysis,
    greedy_min_lamps,
    run_static,
    run_trajectory,
    sensitivity_sweep,
)
from .signal import (
    ResolutionError,
    WaveComponent,
    identify_lamps,
    synthesize_trace,
)
from .solve import (
    Reading,
    STATUS_UNIQUE,
    mflp_least_squares,
    trilaterate,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVE = 2


class _InputError(Exception):
    pass


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise _InputError(f"{path}: {exc}") from None


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fix_rows(fixes):
    rows = []
    for f in fixes:
        est = f.estimate
        err = f.error if f.status == STATUS_UNIQUE else math.nan
        rows.append([
            f.time_s,
            float(f.true_position[0]), float(f.true_position[1]),
            float(f.true_position[2]),
            float(est[0]), float(est[1]), float(est[2]),
            err, f.status,
        ])
    return rows


def _cmd_simulate(args):
    sf = load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else sf.scenario.noise.seed
    if sf.trajectory is not None:
        fixes = run_trajectory(
            sf.scenario, sf.trajectory.waypoints, sf.trajectory.speed_mps,
            sf.trajectory.interval_s, pipeline=args.pipeline, m=args.m,
            mode=args.mode, seed=seed,
        )
        errors = [f.error for f in fixes if f.status == STATUS_UNIQUE]
        failures = sum(1 for f in fixes if f.status != STATUS_UNIQUE)
        stats = ErrorStats.from_errors(errors, failures)
    else:
        if not sf.points:
            raise _InputError("scenario has neither points nor a trajectory")
        fixes, stats = run_static(
            sf.scenario, sf.points, pipeline=args.pipeline, m=args.m,
            mode=args.mode, seed=seed,
        )

    header = ["time_s", "true_x", "true_y", "true_z",
              "est_x", "est_y", "est_z", "error_m", "status"]
    csv_text = render_csv(header, _fix_rows(fixes))
    _emit(csv_text, args.out)
    sidecar = envelope(args.scenario, seed, args.timestamp, extra={
        "pipeline": args.pipeline,
        "mode": args.mode,
        "fixes": len(fixes),
        "failures": stats.failures,
        "stats": dict(zip(STATS_COLUMNS, (fmt(v) for v in stats_row(stats)))),
    })
    if args.out:
        write_json(args.out + ".stats.json", sidecar)
    else:
        sys.stdout.write(render_json(sidecar))
    if fixes and stats.failures > args.max_failure_frac * len(fixes):
        return EXIT_SOLVE
    return EXIT_OK


def _readings_from_json(items):
    return [
        Reading(np.array(r["plane"], dtype=float), float(r["s"]),
                int(r.get("lamp_id", 0)), int(r.get("face_id", i)))
        for i, r in enumerate(items)
    ]


def _profile_from_json(data):
    p = data.get("profile", {"kind": "cosine_power", "params": [1.0]})
    return make_profile(p["kind"], p["params"])


def _cmd_solve(args):
    data = _load_json(args.input)
    try:
        readings = _readings_from_json(data["readings"])
        profile = _profile_from_json(data)
        res = mflp_least_squares(readings, float(data["k"]), profile)
    except (KeyError, ValueError, TypeError) as exc:
        raise _InputError(str(exc)) from None
    out = {
        "status": res.status,
        "point": [fmt(float(v)) for v in res.point],
        "residual_rms": fmt(res.residual_rms),
        "iterations": res.iterations,
    }
    _emit(render_json(out), args.out)
    return EXIT_OK if res.status == STATUS_UNIQUE else EXIT_SOLVE


def _cmd_trilaterate(args):
    data = _load_json(args.input)
    try:
        res = trilaterate(
            np.array(data["lamps"], dtype=float),
            float(data["k"]),
            _profile_from_json(data),
            np.array(data["s"], dtype=float),
            z_receiver=data.get("z_receiver"),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise _InputError(str(exc)) from None
    out = {
        "status": res.status,
        "point": [fmt(float(v)) for v in res.point],
        "residual_rms": fmt(res.residual_rms),
        "iterations": res.iterations,
    }
    _emit(render_json(out), args.out)
    return EXIT_OK if res.status == STATUS_UNIQUE else EXIT_SOLVE


def _cmd_calibrate(args):
    data = _load_json(args.input)
    try:
        points = np.array(data["points"], dtype=float)
        fit = fit_ellipse(points)
        out = {
            "ellipse": {
                "cx": fmt(fit.cx), "cy": fmt(fit.cy),
                "p": fmt(fit.p), "q": fmt(fit.q),
                "phi_deg": fmt(math.degrees(fit.phi)),
            }
        }
        if "samples" in data:
            samples = [
                MagSample(s["mx"], s["my"], s.get("sensor", i))
                for i, s in enumerate(data["samples"])
            ]
            heading = calibrate_heading(
                samples, fit,
                pitch=math.radians(data.get("pitch_deg", 0.0)),
                roll=math.radians(data.get("roll_deg", 0.0)),
            )
            out["heading_deg"] = fmt(math.degrees(heading))
    except (KeyError, ValueError, TypeError) as exc:
        raise _InputError(str(exc)) from None
    _emit(render_json(out), args.out)
    return EXIT_OK


def _cmd_coverage(args):
    sf = load_scenario(args.scenario)
    scn = sf.scenario
    out = {}
    if args.plan:
        if not sf.candidates:
            raise _InputError("scenario has no candidate lamp sites to plan with")
        count, chosen, shortfall = greedy_min_lamps(
            scn.bounds, scn.obstacles, sf.candidates, args.method,
            cell_size=sf.cell_size_m, receiver_height=sf.receiver_height_m,
        )
        out["plan"] = {
            "method": args.method,
            "lamps": count,
            "chosen": chosen,
            "uncovered_cells": shortfall,
        }
    else:
        rep = coverage_analysis(
            scn.bounds, scn.obstacles, scn.lamps, args.method,
            cell_size=sf.cell_size_m, receiver_height=sf.receiver_height_m,
        )
        out["coverage"] = {
            "method": rep.method,
            "fraction": fmt(rep.fraction),
            "uncovered_cells": len(rep.uncovered_cells),
            "lamps": rep.lamp_count,
        }
    _emit(render_json(out), args.out)
    return EXIT_OK


def _cmd_sensitivity(args):
    sf = load_scenario(args.scenario)
    if not sf.points:
        raise _InputError("sensitivity needs scenario points")
    seed = args.seed if args.seed is not None else sf.scenario.noise.seed
    eps_grid = [float(v) for v in args.eps.split(",")]
    eps_h_grid = [math.radians(float(v)) for v in args.eps_h_deg.split(",")]
    rows, monotone = sensitivity_sweep(
        sf.scenario, sf.points, eps_grid, eps_h_grid, args.trials,
        pipeline=args.pipeline, seed=seed,
    )
    header = ["rss_epsilon", "heading_epsilon_deg", *STATS_COLUMNS,
              "count", "failures"]
    table = [
        [eps, math.degrees(eps_h), *stats_row(st), st.count, st.failures]
        for eps, eps_h, st in rows
    ]
    _emit(render_csv(header, table), args.out)
    sidecar = envelope(args.scenario, seed, args.timestamp, extra={
        "trials": args.trials,
        "mean_monotone_in_rss_epsilon": monotone,
    })
    if args.out:
        write_json(args.out + ".stats.json", sidecar)
    else:
        sys.stdout.write(render_json(sidecar))
    return EXIT_OK


def _cmd_signal(args):
    data = _load_json(args.input)
    try:
        components = [
            WaveComponent(c.get("freq_hz", 0.0), c["peak"],
                          c.get("shape", "square_ook"))
            for c in data["components"]
        ]
        trace = synthesize_trace(
            components, data["rate_hz"], data["duration_s"],
            gaussian_noise_sd=data.get("noise_sd", 0.0),
            seed=data.get("seed", 0),
        )
        readings = identify_lamps(trace, data["candidates"])
    except (KeyError, ValueError, TypeError, ResolutionError) as exc:
        raise _InputError(str(exc)) from None
    rows = [[r.freq_hz, r.amplitude] for r in readings]
    _emit(render_csv(["freq_hz", "amplitude"], rows), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lightpos",
        description="Light-intensity indoor positioning toolkit",
    )
    parser.add_argument("--version", action="version",
                        version=f"lightpos {__version__} ({BACKEND} kernel)")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and report fixes")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--out", help="CSV output path (stdout when omitted)")
    sim.add_argument("--pipeline", default="mflp",
                     choices=["mflp", "trilateration", "multi"])
    sim.add_argument("--m", type=int, default=3,
                     help="readings used by the multi pipeline")
    sim.add_argument("--mode", default="fast", choices=["fast", "end_to_end"])
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--max-failure-frac", type=float, default=0.5,
                     help="exit 2 when more than this fraction of fixes fail")
    sim.add_argument("--timestamp", default=None,
                     help="recorded in the sidecar; omitted = null")
    sim.set_defaults(func=_cmd_simulate)

    slv = sub.add_parser("solve", help="single-lamp solve from readings JSON")
    slv.add_argument("--input", required=True)
    slv.add_argument("--out")
    slv.set_defaults(func=_cmd_solve)

    tri = sub.add_parser("trilaterate",
                         help="three-lamp range solve from a JSON input")
    tri.add_argument("--input", required=True)
    tri.add_argument("--out")
    tri.set_defaults(func=_cmd_trilaterate)

    cal = sub.add_parser("calibrate",
                         help="magnetometer ellipse fit and heading")
    cal.add_argument("--input", required=True)
    cal.add_argument("--out")
    cal.set_defaults(func=_cmd_calibrate)

    cov = sub.add_parser("coverage", help="coverage fraction or lamp planning")
    cov.add_argument("--scenario", required=True)
    cov.add_argument("--method", default="mflp",
                     choices=["mflp", "trilateration"])
    cov.add_argument("--plan", action="store_true",
                     help="greedy minimum-lamp placement from candidates")
    cov.add_argument("--out")
    cov.set_defaults(func=_cmd_coverage)

    sen = sub.add_parser("sensitivity", help="noise perturbation sweep")
    sen.add_argument("--scenario", required=True)
    sen.add_argument("--eps", default="0,0.1,0.2",
                     help="comma-separated RSS noise levels")
    sen.add_argument("--eps-h-deg", default="0,5,10",
                     help="comma-separated heading noise bounds in degrees")
    sen.add_argument("--trials", type=int, default=100)
    sen.add_argument("--pipeline", default="mflp",
                     choices=["mflp", "trilateration", "multi"])
    sen.add_argument("--seed", type=int, default=None)
    sen.add_argument("--timestamp", default=None)
    sen.add_argument("--out")
    sen.set_defaults(func=_cmd_sensitivity)

    sig = sub.add_parser("signal",
                         help="synthesize a trace and extract amplitudes")
    sig.add_argument("--input", required=True)
    sig.add_argument("--out")
    sig.set_defaults(func=_cmd_signal)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (_InputError, ScenarioFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
