"""Flat key-value configuration: parsing, resolution, and object building.

Config files are plain text, one ``section.key = value`` per line, with
``#`` comments.  Values are typed by shape: integers, floats, whitespace-
separated float lists, or bare strings.  A resolved configuration is the
full defaults dictionary overlaid with the mission file and any explicit
overrides, so it reproduces a run byte-for-byte when embedded in output
metadata.  The complete schema is documented in the README.
"""

from __future__ import annotations

import hashlib
import json
import re
from importlib import resources

import numpy as np

from .barrier import BarrierParams
from .controller import ControllerConfig, Variant
from .dynamics import make_model
from .errors import ConfigError
from .sampling import SamplingParams
from .sim import MissionSpec, make_mission
from .world import Obstacle, World

PRESETS = ("mission1", "mission2", "mission3")

_STATIC_DEFAULTS = {
    "mission.name": "custom",
    "mission.dt": 0.02,
    "mission.goal": None,
    "mission.goal_radius": None,
    "mission.episode_horizon": None,
    "world.bounds": None,
    "controller.variant": "dbas-log",
    "controller.samples": 1024,
    "controller.horizon": 20,
    "controller.gamma_ctrl": 2.0,
    "controller.sg_window": 9,
    "controller.sg_order": 3,
    "controller.terminal_scale": 10.0,
    "controller.collision_penalty": 1e5,
    "sampling.mu_ln": -0.245,
    "sampling.sigma_ln": 0.7,
    "sampling.mu_coarseness": 0.4,
    "barrier.gamma": 0.9,
    "barrier.r_weight": 1.0,
    "barrier.beta_max": 1e6,
    "barrier.eps_h": 1e-6,
    "run.trials": 30,
    "run.seed": 0,
    "run.controllers": "dbas-log",
}

# settings whose defaults depend on the vehicle model
_MODEL_DEFAULTS = {
    "quadrotor": {
        "mission.start": [0.0, 0.0, 0.0, 0.0, 0.0],
        "controller.lambda": 0.5,
        "controller.q_weights": [5.0, 5.0, 1.0, 0.5, 0.5],
        "sampling.sigma_u": [0.4, 0.12],
        "model.mass": 0.5,
        "model.frame_length": 0.4,
        "model.inertia": 0.005,
        "model.gravity": 9.81,
        "model.max_pitch_rate": 4.0,
        "model.max_thrust": 0.981,
    },
    "vehicle": {
        "mission.start": [0.0, 0.0, 0.0, 0.0],
        "controller.lambda": 1.0,
        "controller.q_weights": [5.0, 5.0, 1.0, 0.5],
        "sampling.sigma_u": [0.075, 2.0],
        "model.wheelbase": 3.0,
        "model.body_length": 4.0,
        "model.body_width": 3.0,
        "model.max_steer": 1.013,
        "model.max_accel": 2.0,
    },
}

_REQUIRED = ("mission.model", "mission.v_set", "mission.reference")
_OBSTACLE_RE = re.compile(r"^world\.obstacle\.(\d+)$")


def _known_keys(model_kind: str) -> set[str]:
    keys = set(_STATIC_DEFAULTS) | set(_MODEL_DEFAULTS[model_kind]) | set(_REQUIRED)
    return keys


def parse_value(text: str):
    """Type a raw config value: int, float, float list, or string."""
    text = text.strip()
    parts = text.split()
    if len(parts) > 1:
        try:
            return [float(p) for p in parts]
        except ValueError:
            return text
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse flat key-value lines into a typed dict."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = parse_value(val)
    return out


def load_mission_source(name_or_path: str) -> dict:
    """Load a mission config from a preset name or a file path."""
    if name_or_path in PRESETS:
        text = (resources.files("barrier_mppi") / "presets" / f"{name_or_path}.cfg").read_text()
        return parse_config_text(text, source=name_or_path)
    try:
        with open(name_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read mission config {name_or_path!r}: {exc}") from exc
    return parse_config_text(text, source=name_or_path)


def resolve(mission_cfg: dict, overrides: dict | None = None) -> dict:
    """Overlay defaults, the mission config, and overrides into one fully
    materialized configuration dict."""
    merged = dict(mission_cfg)
    if overrides:
        merged.update(overrides)
    kind = merged.get("mission.model")
    if kind not in _MODEL_DEFAULTS:
        raise ConfigError(f"mission.model must be one of {sorted(_MODEL_DEFAULTS)}, got {kind!r}")
    resolved = dict(_STATIC_DEFAULTS)
    resolved.update(_MODEL_DEFAULTS[kind])
    known = _known_keys(kind)
    for key, val in merged.items():
        if key not in known and not _OBSTACLE_RE.match(key):
            raise ConfigError(f"unknown config key {key!r}")
        resolved[key] = val
    for req in _REQUIRED:
        if resolved.get(req) is None:
            raise ConfigError(f"missing required config key {req!r}")
    obstacle_ids = sorted(int(m.group(1)) for k in resolved if (m := _OBSTACLE_RE.match(k)))
    if obstacle_ids != list(range(len(obstacle_ids))):
        raise ConfigError("world.obstacle.N indices must be contiguous from 0")
    return resolved


def config_hash(resolved: dict) -> str:
    return hashlib.sha256(canonical_json(resolved).encode()).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _floats(val, length: int | None, key: str) -> list[float]:
    if isinstance(val, (int, float)):
        val = [float(val)]
    if not isinstance(val, list):
        raise ConfigError(f"{key} must be a list of numbers, got {val!r}")
    if length is not None and len(val) != length:
        raise ConfigError(f"{key} must have {length} entries, got {len(val)}")
    return [float(v) for v in val]


def build_model(resolved: dict):
    kind = resolved["mission.model"]
    fields = {k.split(".", 1)[1]: resolved[k]
              for k in resolved if k.startswith("model.") and resolved[k] is not None}
    return make_model(kind, dt=float(resolved["mission.dt"]), **fields)


def build_world(resolved: dict) -> World:
    obstacles = []
    idx = 0
    while f"world.obstacle.{idx}" in resolved:
        vals = _floats(resolved[f"world.obstacle.{idx}"], 3, f"world.obstacle.{idx}")
        obstacles.append(Obstacle(center=np.array(vals[:2]), radius=vals[2]))
        idx += 1
    bounds = resolved.get("world.bounds")
    if bounds is not None:
        b = _floats(bounds, 4, "world.bounds")
        bounds = ((b[0], b[1]), (b[2], b[3]))
    return World(tuple(obstacles), bounds)


def build_mission(resolved: dict) -> MissionSpec:
    model = build_model(resolved)
    world = build_world(resolved)
    ref = _floats(resolved["mission.reference"], None, "mission.reference")
    if len(ref) % 2 or len(ref) < 4:
        raise ConfigError("mission.reference must hold at least two x,y pairs")
    waypoints = np.array(ref).reshape(-1, 2)
    goal = resolved.get("mission.goal")
    horizon = resolved.get("mission.episode_horizon")
    radius = resolved.get("mission.goal_radius")
    return make_mission(
        name=str(resolved["mission.name"]),
        model=model,
        world=world,
        start=np.array(_floats(resolved["mission.start"], model.state_dim, "mission.start")),
        waypoints=waypoints,
        v_set=float(resolved["mission.v_set"]),
        goal=None if goal is None else np.array(_floats(goal, 2, "mission.goal")),
        goal_radius=None if radius is None else float(radius),
        episode_horizon=None if horizon is None else int(horizon),
    )


def build_controller_config(resolved: dict, variant: str | None = None) -> ControllerConfig:
    var = Variant.parse(variant if variant is not None else resolved["controller.variant"])
    sampling = SamplingParams(
        sigma_u=np.array(_floats(resolved["sampling.sigma_u"], None, "sampling.sigma_u")),
        mu_ln=float(resolved["sampling.mu_ln"]),
        sigma_ln=float(resolved["sampling.sigma_ln"]),
        mu_coarseness=float(resolved["sampling.mu_coarseness"]),
        mode="gaussian" if var == Variant.VANILLA else "nln",
    )
    barrier = BarrierParams(
        gamma=float(resolved["barrier.gamma"]),
        r_weight=float(resolved["barrier.r_weight"]),
        beta_max=float(resolved["barrier.beta_max"]),
        eps_h=float(resolved["barrier.eps_h"]),
    )
    return ControllerConfig(
        variant=var,
        num_samples=int(resolved["controller.samples"]),
        horizon=int(resolved["controller.horizon"]),
        lambda_=float(resolved["controller.lambda"]),
        gamma_ctrl=float(resolved["controller.gamma_ctrl"]),
        sg_window=int(resolved["controller.sg_window"]),
        sg_order=int(resolved["controller.sg_order"]),
        q_weights=tuple(_floats(resolved["controller.q_weights"], None, "controller.q_weights")),
        terminal_scale=float(resolved["controller.terminal_scale"]),
        collision_penalty=float(resolved["controller.collision_penalty"]),
        sampling=sampling,
        barrier=barrier,
    )
