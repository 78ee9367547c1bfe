"""Run configuration: JSON schema, defaults, validation.

A config file is a JSON object with optional sections "plant",
"controller", "scenario", "run" and "server"; absent fields take the
shipped defaults (the controller defaults are the classic parameter set:
setpoint 200, light 255, wait 6000 ms, trigger 2000 us). Validation
reports the offending field path and never applies a partial config.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .controller import ControllerParams
from .plant import BeltGeometry
from .scenarios import ScenarioConfig


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class RunSettings:
    duration_s: float | None = None
    object_count: int | None = 500
    seed: int = 1
    headless: bool = True
    log_path: str | None = None

    def validate(self) -> None:
        if (self.duration_s is None) == (self.object_count is None):
            raise ConfigError("run", "exactly one of duration_s or "
                                     "object_count must be set")
        if self.duration_s is not None and self.duration_s < 0:
            raise ConfigError("run.duration_s", "must be nonnegative")
        if self.object_count is not None and self.object_count < 0:
            raise ConfigError("run.object_count", "must be nonnegative")


@dataclass
class ServerSettings:
    bind: str = "127.0.0.1:8000"
    telemetry_hz: int = 10

    def validate(self) -> None:
        if self.telemetry_hz < 1:
            raise ConfigError("server.telemetry_hz", "must be >= 1")
        if ":" not in self.bind:
            raise ConfigError("server.bind", "expected HOST:PORT")

    @property
    def host(self) -> str:
        return self.bind.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.bind.rsplit(":", 1)[1])


@dataclass
class SimConfig:
    geometry: BeltGeometry = field(default_factory=BeltGeometry)
    controller: ControllerParams = field(default_factory=ControllerParams)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    run: RunSettings = field(default_factory=RunSettings)
    server: ServerSettings = field(default_factory=ServerSettings)
    inspection_ms: float = 5.0

    def validate(self) -> None:
        self.controller.validate()
        self.run.validate()
        self.server.validate()
        if self.inspection_ms < 0:
            raise ConfigError("inspection_ms", "must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "plant": {"belt": asdict(self.geometry)},
            "controller": asdict(self.controller),
            "scenario": asdict(self.scenario),
            "run": asdict(self.run),
            "server": asdict(self.server),
            "inspection_ms": self.inspection_ms,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _build(section: str, cls, doc: dict):
    if not isinstance(doc, dict):
        raise ConfigError(section, "must be an object")
    known = set(cls.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{section}.{sorted(unknown)[0]}", "unknown field")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(section, str(exc))


def config_from_dict(doc: dict) -> SimConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = set(doc) - {"plant", "controller", "scenario", "run", "server",
                          "inspection_ms"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")

    plant_doc = doc.get("plant", {})
    if not isinstance(plant_doc, dict) or set(plant_doc) - {"belt"}:
        raise ConfigError("plant", "expected an object with a 'belt' section")
    geometry = _build("plant.belt", BeltGeometry, plant_doc.get("belt", {}))
    controller = _build("controller", ControllerParams,
                        doc.get("controller", {}))

    run_doc = dict(doc.get("run", {}))
    # An explicit duration supersedes the default object count.
    if "duration_s" in run_doc and "object_count" not in run_doc:
        run_doc["object_count"] = None
    run = _build("run", RunSettings, run_doc)

    scenario_doc = dict(doc.get("scenario", {}))
    # One seed drives the whole run unless the scenario pins its own.
    scenario_doc.setdefault("seed", run.seed)
    scenario = _build("scenario", ScenarioConfig, scenario_doc)

    server = _build("server", ServerSettings, doc.get("server", {}))

    cfg = SimConfig(geometry=geometry, controller=controller,
                    scenario=scenario, run=run, server=server,
                    inspection_ms=doc.get("inspection_ms", 5.0))
    try:
        cfg.validate()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("controller", str(exc))
    return cfg


def load_config(path) -> SimConfig:
    """Parse and validate a JSON config file."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}")
    return config_from_dict(doc)


# Ranges the console mirrors for client-side validation.
def editable_ranges() -> dict:
    from .controller import PARAM_RANGES
    return {name: list(bounds) for name, bounds in PARAM_RANGES.items()}
