"""Experiment configuration: embedded defaults, JSON files and dot-path overrides."""

from __future__ import annotations

import copy
import json
from pathlib import Path

from .controller import ControllerConfig
from .dynamics import PushTSystem, TBlockGeometry
from .harness import InitialStateRanges, TrialConfig
from .randomize import DomainDistribution
from .risk import RiskOperator
from .rollout import CostWeights

DEFAULTS = {
    "controller": {
        "K": 128,
        "sigma": 0.4,
        "horizon": 0.5,
        "knots": 6,
        "replan_period": 0.1,
        "weights": {"w_p": 2.0, "w_q": 1.0, "w_c": 0.01, "w_v": 0.01},
        "goal": [0.0, 0.0, 0.0],
    },
    "distribution": {
        "friction": [0.5, 1.5],
        "time_constant": [0.01, 0.03],
        "mass_scale": [0.8, 1.2],
        "gain_scale": [0.8, 1.2],
    },
    "sweep": {
        "R_values": [0, 4, 16, 32, 64],
        "risks": ["average", "pessimistic", "optimistic"],
        "seeds": list(range(20)),
        "T_sim": 7.0,
        "initial_state": {
            "block_position": [-0.1, 0.1],
            "block_angle": [-3.14, 3.14],
            "pusher_position": [-0.1, 0.1],
        },
    },
    "geometry": {
        "bar_half_extents": [0.06, 0.015],
        "stem_half_extents": [0.015, 0.045],
        "stem_offset": 0.06,
        "pusher_radius": 0.01,
    },
    "physics": {
        "block_mass": 0.1,
        "pusher_mass": 0.05,
        "servo_gain": 20.0,
        "u_max": 1.0,
        "dt": 0.01,
        "substeps": 5,
        "gravity": 9.81,
        "v_eps": 0.01,
        "w_eps": 0.1,
        "pusher_reaction": False,
    },
    "landscape": {
        "deltas": [0.1, 0.2, 0.3],
        "grid": [-3.0, 3.0],
        "spacing": 0.001,
        "interval": [-2.0, 2.0],
    },
}


class ConfigError(ValueError):
    """Invalid configuration content."""


class OverrideError(ConfigError):
    """An override names a key that does not exist or is malformed."""


def _merge(base: dict, extra: dict, path: str = "") -> dict:
    for key, value in extra.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            _merge(base[key], value, where + ".")
        else:
            base[key] = value
    return base


def load_config(path: str | Path | None = None) -> dict:
    """Defaults merged with the JSON file at ``path`` (if any)."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is None:
        return cfg
    with open(path) as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")
    return _merge(cfg, data)


def apply_overrides(cfg: dict, overrides) -> dict:
    """Apply ``a.b.c=value`` strings; values are parsed as JSON, falling back to strings."""
    cfg = copy.deepcopy(cfg)
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise OverrideError(f"override {item!r} is not of the form key=value")
        parts = key.split(".")
        node = cfg
        for p in parts[:-1]:
            if not isinstance(node, dict) or p not in node or not isinstance(node[p], dict):
                raise OverrideError(f"unknown override key {key!r}")
            node = node[p]
        if parts[-1] not in node or isinstance(node[parts[-1]], dict):
            raise OverrideError(f"unknown override key {key!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node[parts[-1]] = value
    return cfg


def build_system(cfg: dict) -> PushTSystem:
    g, p = cfg["geometry"], cfg["physics"]
    geometry = TBlockGeometry(tuple(g["bar_half_extents"]), tuple(g["stem_half_extents"]),
                              float(g["stem_offset"]))
    return PushTSystem(geometry=geometry, pusher_radius=float(g["pusher_radius"]),
                       block_mass=float(p["block_mass"]), pusher_mass=float(p["pusher_mass"]),
                       servo_gain=float(p["servo_gain"]), u_max=float(p["u_max"]),
                       dt=float(p["dt"]), substeps=int(p["substeps"]), gravity=float(p["gravity"]),
                       v_eps=float(p["v_eps"]), w_eps=float(p["w_eps"]),
                       pusher_reaction=bool(p["pusher_reaction"]))


def build_trial_config(cfg: dict, seed: int = 0, R: int = 0, risk="average") -> TrialConfig:
    """Typed trial configuration; raises :class:`ConfigError` on invalid values."""
    try:
        c = cfg["controller"]
        weights = CostWeights(goal=tuple(float(v) for v in c["goal"]),
                              **{k: float(v) for k, v in c["weights"].items()})
        controller = ControllerConfig(K=int(c["K"]), sigma=float(c["sigma"]),
                                      horizon=float(c["horizon"]), knots=int(c["knots"]),
                                      replan_period=float(c["replan_period"]), weights=weights)
        d = cfg["distribution"]
        dist = DomainDistribution(**{k: tuple(float(x) for x in v) for k, v in d.items()})
        s = cfg["sweep"]
        init = InitialStateRanges(**{k: tuple(float(x) for x in v)
                                     for k, v in s["initial_state"].items()})
        return TrialConfig(seed=int(seed), R=int(R), risk=risk, T_sim=float(s["T_sim"]),
                           controller=controller, distribution=dist, initial=init,
                           system=build_system(cfg))
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def sweep_axes(cfg: dict):
    s = cfg["sweep"]
    try:
        R_values = [int(r) for r in s["R_values"]]
        risks = [RiskOperator.parse(r) for r in s["risks"]]
        seeds = [int(x) for x in s["seeds"]]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sweep axes: {exc}") from exc
    if not (R_values and risks and seeds):
        raise ConfigError("sweep.R_values, sweep.risks and sweep.seeds must be non-empty")
    return R_values, risks, seeds
