"""Run configuration: JSON schema, validation and construction of the pipeline objects."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .errors import ConfigError, HugoniotError
from .model import SystemDefinition, load_model_file, model_from_spec
from .profile import GridConfig, ShockData, _finish, hugoniot_solve, rh_residual, shock_from_strength

__all__ = ["RUN_SCHEMA", "RunConfig", "load_config", "manifest_hash", "canonical_json", "build_shock"]

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}

_SIM_PROPS = {
    "T": _NUM, "dt_out": _NUM, "c_h": _NUM, "c_p": _NUM, "dt": {"type": ["number", "null"]},
    "perturbation": {
        "type": "object", "additionalProperties": False,
        "properties": {
            "kind": {"enum": ["gaussian", "translate", "zero", "derivative"]},
            "zeta0": _NUM, "width": _NUM, "center": _NUM, "h": {"type": ["number", "null"]},
            "direction": {"oneOf": [_VEC, {"const": "random"}, {"type": "null"}]},
        },
    },
    "delta_method": {"enum": ["projection", "fit", "both"]},
    "norm_shift": {"enum": ["projection", "fit"]},
    "energy_M": _NUM, "energy_theta_factor": _NUM, "snapshot_stride": {"type": "integer", "minimum": 0},
    "picard_tol": _NUM, "picard_max_iter": {"type": "integer", "minimum": 1}, "blowup_factor": _NUM,
    "fit_window": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
    "min_horizon": _NUM, "seed": {"type": "integer"}, "analyze": {"type": "boolean"},
}

RUN_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "model": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["name"],
                 "properties": {"name": {"type": "string"}, "params": {"type": "object"}}},
                {"type": "object", "additionalProperties": False, "required": ["path"],
                 "properties": {"path": {"type": "string"}}},
            ]
        },
        "shock": {
            "type": "object", "additionalProperties": False, "required": ["p"],
            "properties": {"U_minus": _VEC, "U_plus": _VEC, "p": {"type": "integer", "minimum": 1},
                           "s": _NUM, "epsilon": {"type": "number", "minimum": 0}},
            # s and epsilon are exclusive; an explicit U_plus needs s
            "not": {"anyOf": [{"required": ["s", "epsilon"]}, {"required": ["epsilon", "U_plus"]}]},
            "dependentRequired": {"U_plus": ["s"]},
        },
        "grid": {
            "type": "object", "additionalProperties": False,
            "properties": {"M": {"type": "integer", "minimum": 5}, "L": {"type": ["number", "null"]},
                           "L_factor": _NUM, "shift": _NUM, "method": {"enum": ["auto", "shooting", "collocation"]}},
        },
        "simulation": {"type": "object", "additionalProperties": False, "properties": {
            **_SIM_PROPS, "mode": {"enum": ["nonlinear", "linear"]}}},
        "check": {"type": "object", "additionalProperties": False,
                  "properties": {"points_per_axis": {"type": "integer", "minimum": 2}}},
        "kernel": {"type": "object", "additionalProperties": False, "properties": {
            "dump_y": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
            "dump_t": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}}},
        "verify": {"type": "object", "additionalProperties": False, "properties": {
            "criteria": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 10}},
            "zeta0_sweep": _VEC, "epsilon_sweep": _VEC}},
        "seed": {"type": "integer"},
        "out": {"type": "string"},
    },
}


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def manifest_hash(cfg: dict) -> str:
    """SHA-256 of the canonical JSON form of a configuration."""
    return hashlib.sha256(canonical_json(cfg).encode("ascii")).hexdigest()


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def manifest(self) -> str:
        return manifest_hash(self.raw)

    def section(self, name: str) -> dict:
        return copy.deepcopy(self.raw.get(name, {}))

    def system(self) -> SystemDefinition:
        spec = self.raw["model"]
        if "path" in spec:
            p = Path(spec["path"])
            return load_model_file(p if p.is_absolute() else self.base_dir / p)
        return model_from_spec(spec)

    def grid(self) -> GridConfig:
        return GridConfig.from_dict(self.section("grid"))

    def with_override(self, dotted: str, value: Any) -> "RunConfig":
        """Copy with ``section.key`` (or a top-level key) replaced, then revalidated."""
        raw = copy.deepcopy(self.raw)
        node = raw
        parts = dotted.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override {dotted!r}")
        node[parts[-1]] = value
        return RunConfig(validate_raw(raw), self.base_dir)


def validate_raw(raw: Any) -> dict:
    try:
        jsonschema.validate(raw, RUN_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from exc
    return raw


def load_config(path: str | Path) -> RunConfig:
    """Read and schema-validate a JSON run configuration.

    Raises
    ------
    ConfigError
        On unreadable or malformed JSON, or on schema violations.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return RunConfig(validate_raw(raw), path.parent)


def build_shock(sys: SystemDefinition, spec: dict) -> ShockData:
    """Shock from ``{p, U_minus?, s | epsilon | (s, U_plus)}``.

    Raises
    ------
    HugoniotError
        For ``epsilon = 0`` (degenerate) or an explicit triple violating the jump relations.
    """
    if not spec:
        raise ConfigError("config has no shock section")
    Um = np.asarray(spec.get("U_minus", sys.base_point), float)
    if Um.shape != (sys.n,):
        raise ConfigError(f"U_minus must have length {sys.n}")
    p = int(spec["p"])
    if not 1 <= p <= sys.n:
        raise ConfigError(f"p must lie in 1..{sys.n}")
    if "epsilon" in spec:
        if spec["epsilon"] == 0:
            raise HugoniotError("degenerate shock: epsilon = 0")
        return shock_from_strength(sys, Um, p, float(spec["epsilon"]))
    if "s" not in spec:
        raise ConfigError("shock needs either s or epsilon")
    s = float(spec["s"])
    if "U_plus" in spec:
        Up = np.asarray(spec["U_plus"], float)
        if Up.shape != (sys.n,):
            raise ConfigError(f"U_plus must have length {sys.n}")
        res = rh_residual(sys, Um, Up, s)
        if res > 1e-8:
            raise HugoniotError(f"triple violates the jump relations (residual {res:.3e})")
        return _finish(sys, Um, Up, s, p)
    return hugoniot_solve(sys, Um, p, s)
