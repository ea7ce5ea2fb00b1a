"""Scenario file loading: JSON schema validation and conversion to the
simulation model.

Files use meters, degrees, and Hz; angles are converted to radians on
load.  Validation failures report the JSON path of the offending field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import jsonschema
import numpy as np

from .geom import Aabb
from .rss import LampModel, make_profile
from .sim import NoiseSpec, ReceiverSpec, Scenario

_VEC3 = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 3,
    "maxItems": 3,
}

_BOX = {
    "type": "object",
    "properties": {"min": _VEC3, "max": _VEC3},
    "required": ["min", "max"],
    "additionalProperties": False,
}

_PROFILE = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["cosine_power", "polynomial"]},
        "params": {"type": "array", "items": {"type": "number"}, "minItems": 1},
    },
    "required": ["kind", "params"],
    "additionalProperties": False,
}

_LAMP = {
    "type": "object",
    "properties": {
        "position": _VEC3,
        "central_ray": _VEC3,
        "k": {"type": "number", "exclusiveMinimum": 0},
        "profile": _PROFILE,
        "flash_hz": {"type": "number", "exclusiveMinimum": 0},
        "range_m": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["position", "k", "flash_hz"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "bounds": _BOX,
        "obstacles": {"type": "array", "items": _BOX},
        "lamps": {"type": "array", "items": _LAMP, "minItems": 1},
        "candidates": {"type": "array", "items": _LAMP},
        "receiver": {
            "type": "object",
            "properties": {
                "edge_length_m": {"type": "number", "exclusiveMinimum": 0},
                "base_height_m": {"type": "number"},
            },
            "additionalProperties": False,
        },
        "noise": {
            "type": "object",
            "properties": {
                "rss_epsilon": {"type": "number", "minimum": 0, "maximum": 0.2},
                "heading_epsilon_deg": {"type": "number", "minimum": 0},
                "accel_sd": {"type": "number", "minimum": 0},
                "trace_noise_sd": {"type": "number", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "saturation": {"type": "number", "exclusiveMinimum": 0},
        "ambient_dc": {"type": "number", "minimum": 0},
        "sample_rate_hz": {"type": "number", "exclusiveMinimum": 0},
        "window_s": {"type": "number", "exclusiveMinimum": 0},
        "points": {"type": "array", "items": _VEC3, "minItems": 1},
        "trajectory": {
            "type": "object",
            "properties": {
                "waypoints": {"type": "array", "items": _VEC3, "minItems": 2},
                "speed_mps": {"type": "number", "exclusiveMinimum": 0},
                "interval_s": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["waypoints", "speed_mps", "interval_s"],
            "additionalProperties": False,
        },
        "coverage": {
            "type": "object",
            "properties": {
                "cell_size_m": {"type": "number", "exclusiveMinimum": 0},
                "receiver_height_m": {"type": "number"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["bounds", "lamps"],
    "additionalProperties": False,
}


class ScenarioFormatError(ValueError):
    """Raised for scenario files that fail schema or model validation."""


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple
    speed_mps: float
    interval_s: float


@dataclass(frozen=True)
class ScenarioFile:
    """A validated scenario plus its evaluation inputs."""

    scenario: Scenario
    points: tuple = ()
    trajectory: Trajectory | None = None
    candidates: tuple = ()
    cell_size_m: float = 0.3
    receiver_height_m: float = 0.0


def _lamp_from_json(obj) -> LampModel:
    profile_obj = obj.get("profile", {"kind": "cosine_power", "params": [1.0]})
    return LampModel(
        position=np.array(obj["position"], dtype=float),
        central_ray=np.array(obj.get("central_ray", [0.0, 0.0, -1.0])),
        k=obj["k"],
        profile=make_profile(profile_obj["kind"], profile_obj["params"]),
        flash_hz=obj["flash_hz"],
        range_m=obj.get("range_m", math.inf),
    )


def parse_scenario(data) -> ScenarioFile:
    """Validate a decoded scenario document and build the model objects."""
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "(top level)"
        raise ScenarioFormatError(f"at {path}: {exc.message}") from None

    try:
        bounds = Aabb(data["bounds"]["min"], data["bounds"]["max"])
        obstacles = tuple(
            Aabb(o["min"], o["max"]) for o in data.get("obstacles", [])
        )
        lamps = tuple(_lamp_from_json(l) for l in data["lamps"])
        candidates = tuple(_lamp_from_json(l) for l in data.get("candidates", []))
        rx = data.get("receiver", {})
        receiver = ReceiverSpec.default(
            rx.get("edge_length_m", 0.05), rx.get("base_height_m", 0.0)
        )
        nz = data.get("noise", {})
        noise = NoiseSpec(
            rss_epsilon=nz.get("rss_epsilon", 0.0),
            heading_epsilon=math.radians(nz.get("heading_epsilon_deg", 0.0)),
            accel_sd=nz.get("accel_sd", 0.0),
            trace_noise_sd=nz.get("trace_noise_sd", 0.0),
            seed=nz.get("seed", 0),
        )
        scn = Scenario(
            bounds=bounds,
            obstacles=obstacles,
            lamps=lamps,
            receiver=receiver,
            noise=noise,
            saturation=data.get("saturation", 1000.0),
            ambient_dc=data.get("ambient_dc", 850.0),
            sample_rate_hz=data.get("sample_rate_hz", 640.0),
            window_s=data.get("window_s", 0.3),
        )
    except ValueError as exc:
        raise ScenarioFormatError(str(exc)) from None

    traj = None
    if "trajectory" in data:
        t = data["trajectory"]
        traj = Trajectory(
            tuple(np.array(w, dtype=float) for w in t["waypoints"]),
            t["speed_mps"],
            t["interval_s"],
        )
    cov = data.get("coverage", {})
    return ScenarioFile(
        scenario=scn,
        points=tuple(np.array(p, dtype=float) for p in data.get("points", [])),
        trajectory=traj,
        candidates=candidates,
        cell_size_m=cov.get("cell_size_m", 0.3),
        receiver_height_m=cov.get("receiver_height_m", 0.0),
    )


def load_scenario(path) -> ScenarioFile:
    """Load and validate a scenario JSON file."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(f"invalid JSON: {exc}") from None
    return parse_scenario(data)
