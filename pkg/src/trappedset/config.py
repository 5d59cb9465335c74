"""Run configuration: an INI file with a fixed schema and strict keys.

Sections and keys (all optional, defaults shown by :data:`DEFAULTS`)::

    [model]        kind = cylinder | schottky | three_disk
    [cylinder]     core_length
    [schottky]     a11 a12 a21 a22 b11 b12 b21 b22
    [three_disk]   separation radius
    [enumeration]  horizon oriented max_symbol_length orbit_cap
    [analysis]     epsilon nu c0 alpha seed

When ``[model] kind`` is absent the model is the single model section
present, or the cylinder if there is none.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from trappedset.errors import ConfigurationError
from trappedset.generators import (
    CylinderConfig,
    SchottkyConfig,
    ThreeDiskConfig,
    validate_schottky,
)
from trappedset.generators.schottky import DEFAULT_ORBIT_CAP, schottky_generators
from trappedset.orbits import Model

EPSILON_CAP = 0.2
HORIZON_CAP = 40.0

_DEFAULT_A, _DEFAULT_B = schottky_generators()

DEFAULTS = {
    "model": {"kind": None},
    "cylinder": {"core_length": 2.0},
    "schottky": {
        "a11": _DEFAULT_A[0, 0], "a12": _DEFAULT_A[0, 1], "a21": _DEFAULT_A[1, 0], "a22": _DEFAULT_A[1, 1],
        "b11": _DEFAULT_B[0, 0], "b12": _DEFAULT_B[0, 1], "b21": _DEFAULT_B[1, 0], "b22": _DEFAULT_B[1, 1],
    },
    "three_disk": {"separation": 6.0, "radius": 1.0},
    "enumeration": {"horizon": 12.0, "oriented": False, "max_symbol_length": 12, "orbit_cap": DEFAULT_ORBIT_CAP},
    "analysis": {"epsilon": 0.1, "nu": 0.1, "c0": 1.0, "alpha": 2.0, "seed": 0},
}

_MODEL_SECTIONS = ("cylinder", "schottky", "three_disk")


@dataclass
class RunConfig:
    model: Model
    values: dict = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.values[section][key]

    @property
    def horizon(self) -> float:
        return self.values["enumeration"]["horizon"]

    def model_config(self):
        """Model configuration; a Schottky group is validated here."""
        if self.model is Model.CYLINDER:
            return CylinderConfig(self.get("cylinder", "core_length"))
        if self.model is Model.THREE_DISK:
            return ThreeDiskConfig(self.get("three_disk", "separation"), self.get("three_disk", "radius"))
        s = self.values["schottky"]
        a = np.array([[s["a11"], s["a12"]], [s["a21"], s["a22"]]])
        b = np.array([[s["b11"], s["b12"]], [s["b21"], s["b22"]]])
        report = validate_schottky(SchottkyConfig(a, b))
        if not report.accepted:
            raise ConfigurationError(f"Schottky validation failed:\n{report}")
        return report.config

    def digest(self) -> str:
        text = json.dumps({"model": self.model.value, **self.values}, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()

    def as_dict(self) -> dict:
        return {"model": self.model.value, **self.values}


def _coerce(section: str, key: str, raw):
    default = DEFAULTS[section][key]
    if section == "model":
        try:
            return Model(raw)
        except ValueError as exc:
            raise ConfigurationError(f"[model] kind: unknown model {raw!r}") from exc
    try:
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        return float(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def _validate(values: dict) -> None:
    an, en = values["analysis"], values["enumeration"]
    if not 0 < an["epsilon"] <= EPSILON_CAP:
        raise ConfigurationError(f"[analysis] epsilon={an['epsilon']} must lie in (0, {EPSILON_CAP}]")
    if not an["nu"] > 0:
        raise ConfigurationError(f"[analysis] nu={an['nu']} must be positive")
    if not an["c0"] > 0:
        raise ConfigurationError(f"[analysis] c0={an['c0']} must be positive")
    if not an["alpha"] > 0:
        raise ConfigurationError(f"[analysis] alpha={an['alpha']} must be positive")
    if not 0 < en["horizon"] <= HORIZON_CAP:
        raise ConfigurationError(f"[enumeration] horizon={en['horizon']} must lie in (0, {HORIZON_CAP}]")
    if en["max_symbol_length"] < 2:
        raise ConfigurationError("[enumeration] max_symbol_length must be at least 2")
    if en["orbit_cap"] < 1:
        raise ConfigurationError("[enumeration] orbit_cap must be positive")
    if not values["cylinder"]["core_length"] > 0:
        raise ConfigurationError("[cylinder] core_length must be positive")
    td = values["three_disk"]
    if not (td["radius"] > 0 and td["separation"] > 2 * td["radius"]):
        raise ConfigurationError("[three_disk] need separation > 2 * radius > 0")


def build_config(overrides: dict | None = None, present: set | None = None) -> RunConfig:
    """Fill defaults, apply ``{section: {key: value}}`` overrides and validate."""
    values = {sec: {k: v for k, v in keys.items()} for sec, keys in DEFAULTS.items()}
    for sec, keys in (overrides or {}).items():
        if sec not in DEFAULTS:
            raise ConfigurationError(f"unknown section [{sec}]")
        for key, raw in keys.items():
            if key not in DEFAULTS[sec]:
                raise ConfigurationError(f"unknown key {key!r} in section [{sec}]")
            values[sec][key] = _coerce(sec, key, raw)
    kind = values.pop("model")["kind"]
    if kind is None:
        sections = [s for s in _MODEL_SECTIONS if s in (present or ())]
        if len(sections) > 1:
            raise ConfigurationError(f"several model sections {sections}; set [model] kind")
        kind = Model(sections[0]) if sections else Model.CYLINDER
    _validate(values)
    return RunConfig(kind, values)


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case so typos are reported verbatim
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file {path} not found") from exc
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    overrides = {sec: dict(parser.items(sec)) for sec in parser.sections()}
    return build_config(overrides, present=set(parser.sections()))


def dump_config(config: RunConfig) -> str:
    return json.dumps(config.as_dict(), indent=2, sort_keys=True, default=str)

