"""Versioned JSON configuration: one file describes plant, controller,
simulation, and scenario overrides.

Unknown keys and out-of-range values are rejected with messages naming
the offending field.  The schema is deliberately flat: every leaf maps
one-to-one onto a dataclass field in the parameter layer.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .params import (Params, TurbineParams, GridParams, ElectricalParams,
                     ControllerConfig, VicParams, VsmParams, LimiterConfig,
                     ConfigError)
from .simcore import SimConfig

SCHEMA_VERSION = 1

_SECTIONS = ("version", "turbine", "grid", "electrical", "controller",
             "sim", "scenario")


def _fields_of(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _build(cls, data: dict, section: str):
    allowed = _fields_of(cls)
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) in '{section}': "
                          f"{', '.join(sorted(unknown))}")
    try:
        return cls(**data)
    except ConfigError as exc:
        raise ConfigError(f"in '{section}': {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"in '{section}': {exc}") from exc


def parse_config(data: dict) -> dict:
    """Validate a parsed JSON document; returns {'params', 'sim', 'scenario'}."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level section(s): "
                          f"{', '.join(sorted(unknown))}")
    version = data.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config version {version!r}; "
                          f"this build reads version {SCHEMA_VERSION}")

    turbine = _build(TurbineParams, data.get("turbine", {}), "turbine")
    grid = _build(GridParams, data.get("grid", {}), "grid")
    electrical = _build(ElectricalParams, data.get("electrical", {}),
                        "electrical")

    ctrl_data = dict(data.get("controller", {}))
    if "vic" in ctrl_data:
        ctrl_data["vic"] = _build(VicParams, ctrl_data["vic"],
                                  "controller.vic")
    if "vsm" in ctrl_data:
        ctrl_data["vsm"] = _build(VsmParams, ctrl_data["vsm"],
                                  "controller.vsm")
    if "limiter" in ctrl_data:
        ctrl_data["limiter"] = _build(LimiterConfig, ctrl_data["limiter"],
                                      "controller.limiter")
    controller = _build(ControllerConfig, ctrl_data, "controller")

    sim = None
    if "sim" in data:
        sim = _build(SimConfig, data["sim"], "sim")

    scenario = data.get("scenario", {})
    if not isinstance(scenario, dict):
        raise ConfigError("'scenario' must be an object of overrides")

    params = Params(turbine=turbine, grid=grid, electrical=electrical,
                    controller=controller)
    return {"params": params, "sim": sim, "scenario": scenario}


def load_config(path: str | Path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from exc
    return parse_config(data)


def default_config_dict() -> dict:
    """A complete, commented-by-structure default document."""
    p = Params()
    return {
        "version": SCHEMA_VERSION,
        "turbine": dataclasses.asdict(p.turbine),
        "grid": dataclasses.asdict(p.grid),
        "electrical": dataclasses.asdict(p.electrical),
        "controller": dataclasses.asdict(p.controller),
        "sim": dataclasses.asdict(SimConfig()),
        "scenario": {},
    }
