"""INI configuration files.

Sections: ``[mesh]`` (MeshConfig fields), ``[simulation]`` and one
``[plant.<id>]`` section per plant, in cascade order. Unknown sections or
keys are rejected. Missing keys take their documented defaults, except the
plant coefficients, which a dispatch configuration must provide.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from .hydro import PlantParameters
from .mesh import MeshConfig


class ConfigError(ValueError):
    pass


_BOOL = {"true": True, "yes": True, "1": True, "on": True, "false": False, "no": False, "0": False, "off": False}

MESH_KEYS = {f.name: f.type for f in fields(MeshConfig)}
SIMULATION_DEFAULTS = {
    "hours": 24,
    "runs_per_hour": 30,
    "initial_volume_fraction": 0.8,
    "tolerance": 0.005,
    "literal_penalty": False,
}
PLANT_REQUIRED = ("unit_count", "upstream_coeffs", "downstream_coeffs", "efficiency_coeffs")
PLANT_PAIRS = ("turbine_flow_bounds", "unit_power_bounds", "defluent_bounds", "reservoir_bounds")
PLANT_FLOATS = ("spill_max", "penstock_loss", "capacity", "evaporation", "area")
PLANT_KEYS = set(PLANT_REQUIRED) | set(PLANT_PAIRS) | set(PLANT_FLOATS) | {"name"}


@dataclass
class PlantEntry:
    params: PlantParameters
    evaporation: float = 0.0
    area: float = 0.0


@dataclass
class Config:
    mesh: MeshConfig = field(default_factory=MeshConfig)
    simulation: dict = field(default_factory=lambda: dict(SIMULATION_DEFAULTS))
    plants: list[PlantEntry] = field(default_factory=list)
    source: str = "<defaults>"

    def require_plants(self) -> list[PlantEntry]:
        if not self.plants:
            raise ConfigError(
                f"{self.source}: no [plant.*] sections; required keys: {', '.join(PLANT_REQUIRED)}"
            )
        return self.plants


def _convert(section: str, key: str, raw: str, kind):
    where = f"[{section}] {key}"
    raw = raw.strip()
    try:
        if kind in (bool, "bool"):
            return _BOOL[raw.lower()]
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
        if kind == "floats":
            return tuple(float(v) for v in raw.replace(";", ",").split(",") if v.strip())
        if kind in (str, "str"):
            return raw
    except (KeyError, ValueError):
        pass
    label = {"bool": "a boolean", "int": "an integer", "float": "a number", "floats": "a list of numbers"}.get(
        kind if isinstance(kind, str) else kind.__name__, str(kind)
    )
    raise ConfigError(f"{where}: expected {label}, got {raw!r}")


def _mesh_from(section) -> MeshConfig:
    values = {}
    for key, raw in section.items():
        if key not in MESH_KEYS:
            raise ConfigError(f"[mesh] {key}: unknown key (allowed: {', '.join(sorted(MESH_KEYS))})")
        values[key] = _convert("mesh", key, raw, MESH_KEYS[key])
    try:
        return MeshConfig(**values)
    except ValueError as exc:
        raise ConfigError(f"[mesh] {exc}") from None


def _simulation_from(section) -> dict:
    out = dict(SIMULATION_DEFAULTS)
    for key, raw in section.items():
        if key not in SIMULATION_DEFAULTS:
            raise ConfigError(
                f"[simulation] {key}: unknown key (allowed: {', '.join(sorted(SIMULATION_DEFAULTS))})"
            )
        out[key] = _convert("simulation", key, raw, type(SIMULATION_DEFAULTS[key]).__name__)
    checks = [
        (out["hours"] >= 1, "hours must be ≥ 1"),
        (out["runs_per_hour"] >= 1, "runs_per_hour must be ≥ 1"),
        (0 < out["initial_volume_fraction"] <= 1, "initial_volume_fraction must be in (0, 1]"),
        (out["tolerance"] >= 0, "tolerance must be ≥ 0"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigError(f"[simulation] {msg}")
    return out


def _plant_from(name: str, section) -> PlantEntry:
    sec = f"plant.{name}"
    for key in section:
        if key not in PLANT_KEYS:
            raise ConfigError(f"[{sec}] {key}: unknown key (allowed: {', '.join(sorted(PLANT_KEYS))})")
    missing = [k for k in PLANT_REQUIRED if k not in section]
    if missing:
        raise ConfigError(f"[{sec}] missing required key(s): {', '.join(missing)}")
    kwargs = {"name": section.get("name", name.upper()).strip()}
    kwargs["unit_count"] = _convert(sec, "unit_count", section["unit_count"], "int")
    for key in ("upstream_coeffs", "downstream_coeffs", "efficiency_coeffs"):
        kwargs[key] = _convert(sec, key, section[key], "floats")
    for key in PLANT_PAIRS:
        if key in section:
            pair = _convert(sec, key, section[key], "floats")
            if len(pair) != 2:
                raise ConfigError(f"[{sec}] {key}: expected 'lower, upper'")
            kwargs[key] = pair
    extras = {}
    for key in PLANT_FLOATS:
        if key in section:
            value = _convert(sec, key, section[key], "float")
            if key in ("evaporation", "area"):
                if value < 0:
                    raise ConfigError(f"[{sec}] {key} must be ≥ 0")
                extras[key] = value
            else:
                kwargs[key] = value
    try:
        params = PlantParameters(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{sec}] {exc}") from None
    return PlantEntry(params, **extras)


def parse_config(text: str, source: str = "<string>") -> Config:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    cfg = Config(source=source)
    for name in parser.sections():
        section = parser[name]
        if name == "mesh":
            cfg.mesh = _mesh_from(section)
        elif name == "simulation":
            cfg.simulation = _simulation_from(section)
        elif name.startswith("plant."):
            cfg.plants.append(_plant_from(name[len("plant.") :], section))
        else:
            raise ConfigError(f"{source}: unknown section [{name}]")
    return cfg


def load_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    return parse_config(text, str(path))


def packaged_path(kind: str, name: str) -> Path:
    """Path of a file shipped with the package (``kind`` is configs or data)."""
    return Path(str(resources.files("mesh_hydro") / kind / name))


def format_plant_section(plant: PlantParameters, key: str | None = None) -> str:
    """INI text for a plant, with full float precision."""
    lines = [f"[plant.{(key or plant.name).lower()}]", f"name = {plant.name}", f"unit_count = {plant.unit_count}"]
    for k in ("upstream_coeffs", "downstream_coeffs", "efficiency_coeffs", *PLANT_PAIRS):
        lines.append(f"{k} = {', '.join(repr(float(v)) for v in getattr(plant, k))}")
    for k in ("spill_max", "penstock_loss", "capacity"):
        lines.append(f"{k} = {getattr(plant, k)!r}")
    return "\n".join(lines) + "\n"
