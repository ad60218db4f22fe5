"""JSON experiment configuration: loading, validation and writing."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema

from .exceptions import ConfigError
from .integrate import SolverOptions
from .model import ControlSettings, ModelParameters

__all__ = ["ExperimentConfig", "load_config", "parse_config", "write_config", "config_schema"]


def config_schema() -> dict:
    text = resources.files("matdyn").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


@dataclass
class ExperimentConfig:
    experiment: Optional[str] = None
    parameters: ModelParameters = field(default_factory=ModelParameters)
    control: ControlSettings = field(default_factory=ControlSettings)
    solver: SolverOptions = field(default_factory=SolverOptions)
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "parameters": asdict(self.parameters),
            "control": asdict(self.control),
            "solver": asdict(self.solver),
            "options": dict(self.options),
        }
        if self.experiment is not None:
            out["experiment"] = self.experiment
        return out


def _path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(x) for x in err.absolute_path) or "<root>"


def parse_config(data) -> ExperimentConfig:
    """Validate an already-decoded JSON object and build the config."""
    validator = jsonschema.Draft202012Validator(config_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        msg = "; ".join(f"{_path(e)}: {e.message}" for e in errors)
        raise ConfigError(f"schema violation at {msg}")
    try:
        return ExperimentConfig(
            experiment=data.get("experiment"),
            parameters=ModelParameters(**data.get("parameters", {})),
            control=ControlSettings(**data.get("control", {})),
            solver=SolverOptions(**data.get("solver", {})),
            options=dict(data.get("options", {})),
        )
    except ValueError as exc:
        # cross-field checks the schema cannot express (h_min <= h_init ...)
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config; omitted blocks take their defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(data)


def write_config(config: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(config.to_dict(), indent=2) + "\n")
    return path
