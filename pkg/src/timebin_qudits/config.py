"""Scenario configuration: TOML file, schema validation, dotted-path overrides."""

from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from typing import Any, Optional

import jsonschema

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .chain import HardwareParams
from .errors import ConfigError
from .hilbert import ns_to_ps
from .montecarlo import NoiseModel

SCHEMA_VERSION = 1

DEFAULT_CONFIG: dict = {
    "schema_version": SCHEMA_VERSION,
    "dimension": 4,
    "seed": 42,
    "shots": 100_000,
    "bases": [[0, 0], [0, 1], [1, 0], [1, 1]],
    "hardware": {
        "fine_pitch_ps": 2.25,
        "coarse_delays_ns": None,
        "theta_deg": 45.0,
        "delta_phi_deg": 180.0,
        "extra_phases_deg": [0.0, 0.0],
        "delayed_pol": "V",
        "hwp_angles_deg": [0.0, 22.5],
        "stage_transmissions": [],
        "signal_wavelength_nm": 720.0,
    },
    "noise": {
        "mu": 0.14,
        "jitter_sigma_ps": 350.0,
        "dark_count_rate_hz": 0.0,
        "rep_rate_hz": 80e6,
        "transmissions": {"smf1_coupling": 0.80, "smf2_coupling": 0.76, "detector_efficiency": 1.0},
    },
    "run": {"shards": 1, "workers": 1},
    "output": {"dir": "out", "format": "csv"},
    "sweep": {"parameter": "hardware.delta_phi_deg", "start": 90.0, "stop": 180.0, "num": 19},
    "rates": {"dimensions": [2, 4, 8], "qbers": [0.0, 0.01, 0.028, 0.05, 0.1]},
}

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False, "required": list(required)}


SCHEMA = _obj(
    {
        "schema_version": {"const": SCHEMA_VERSION},
        "dimension": {"type": "integer", "minimum": 2, "maximum": 16},
        "seed": {"type": "integer", "minimum": 0},
        "shots": {"type": "integer", "minimum": 0},
        "bases": {
            "type": "array",
            "items": {"type": "array", "items": {"enum": [0, 1]}, "minItems": 2, "maxItems": 2},
        },
        "hardware": _obj(
            {
                "fine_pitch_ps": {"type": "number", "exclusiveMinimum": 0},
                "coarse_delays_ns": {"anyOf": [{"type": "null"}, {"type": "array", "items": _NONNEG}]},
                "theta_deg": {"type": "number", "minimum": 0, "maximum": 90},
                "delta_phi_deg": {"type": "number", "minimum": 0, "exclusiveMaximum": 360},
                "extra_phases_deg": {"type": "array", "items": _NUM},
                "delayed_pol": {"enum": ["H", "V"]},
                "hwp_angles_deg": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "stage_transmissions": {"type": "array", "items": _PROB},
                "signal_wavelength_nm": {"type": "number", "exclusiveMinimum": 0},
            }
        ),
        "noise": _obj(
            {
                "mu": _NONNEG,
                "jitter_sigma_ps": _NONNEG,
                "dark_count_rate_hz": _NONNEG,
                "rep_rate_hz": {"type": "number", "exclusiveMinimum": 0},
                "transmissions": {"type": "object", "additionalProperties": _PROB},
            }
        ),
        "run": _obj({"shards": {"type": "integer", "minimum": 1}, "workers": {"type": "integer", "minimum": 1}}),
        "output": _obj({"dir": {"type": "string"}, "format": {"enum": ["csv", "json"]}}),
        "sweep": _obj(
            {
                "parameter": {"type": "string"},
                "start": _NUM,
                "stop": _NUM,
                "num": {"type": "integer", "minimum": 1},
            }
        ),
        "rates": _obj(
            {
                "dimensions": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "qbers": {"type": "array", "items": _PROB},
            }
        ),
    }
)


def _merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "transmissions":
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_value(text: str) -> Any:
    """TOML literal if it parses as one, else the raw string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def set_path(cfg: dict, dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = cfg
    for key in keys[:-1]:
        if not isinstance(node.get(key), dict):
            node[key] = {}
        node = node[key]
    node[keys[-1]] = value


def get_path(cfg: dict, dotted: str) -> Any:
    node = cfg
    for key in dotted.split("."):
        node = node[key]
    return node


def validate(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path)
        raise ConfigError(f"invalid config at '{path}': {exc.message}", path=path) from None
    d = cfg["dimension"]
    delays = cfg["hardware"]["coarse_delays_ns"]
    if delays is not None and 2 ** len(delays) != d:
        raise ConfigError(
            f"dimension {d} needs log2(d) coarse delays", dimension=d, coarse_delays_ns=delays
        )
    return cfg


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> dict:
    """Defaults <- file <- overrides (dotted keys), then schema-validated."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path, "rb") as fh:
                cfg = _merge(cfg, tomllib.load(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", path=str(path)) from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML: {exc}", path=str(path)) from None
    for key, value in (overrides or {}).items():
        set_path(cfg, key, value)
    return validate(cfg)


def config_hash(cfg: dict) -> str:
    """Short digest of the scenario; output location and format are not part of it."""
    scenario = {k: v for k, v in cfg.items() if k != "output"}
    return hashlib.sha256(json.dumps(scenario, sort_keys=True).encode()).hexdigest()[:16]


def hardware_from_config(cfg: dict) -> HardwareParams:
    hw = cfg["hardware"]
    delays = hw["coarse_delays_ns"]
    return HardwareParams(
        fine_pitch_ps=float(hw["fine_pitch_ps"]),
        coarse_delays_ps=None if delays is None else tuple(ns_to_ps(x) for x in delays),
        theta=math.radians(hw["theta_deg"]),
        delta_phi=math.radians(hw["delta_phi_deg"]),
        extra_phases=tuple(math.radians(x) for x in hw["extra_phases_deg"]),
        delayed_pol=hw["delayed_pol"],
        hwp_angles=tuple(math.radians(x) for x in hw["hwp_angles_deg"]),
        stage_transmissions=tuple(hw["stage_transmissions"]),
    )


def noise_from_config(cfg: dict) -> NoiseModel:
    n = cfg["noise"]
    return NoiseModel(
        mu=float(n["mu"]),
        jitter_sigma_ps=float(n["jitter_sigma_ps"]),
        dark_count_rate_hz=float(n["dark_count_rate_hz"]),
        transmissions=dict(n["transmissions"]),
        rep_rate_hz=float(n["rep_rate_hz"]),
    )
