"""
Run configuration parsing: dotenv-style key=value files plus inline overrides.

A config file looks like

    command=sweep-ratio
    n=1000
    m=500
    rho=0.18
    ratios=1,5,10,50,100
    trials=50

Keys mirror the ExperimentSpec fields (or the ContourParams fields for the
contour command).
"""
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Union

from dotenv import dotenv_values
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import ConfigurationError, InvalidParameterError
from app.models.experiment import ExperimentSpec
from app.models.run_config import ContourParams, RunConfig
from app.models.types import Command, OutputFormat

logger = logging.getLogger(__name__)

_TOP_LEVEL_KEYS = {"command", "output_path", "format"}
_LIST_KEYS = {
    Command.SWEEP_RATIO.value: "ratios",
    Command.SWEEP_NOISE.value: "noise_vars",
}


def _error_keys(error: ValidationError, prefix: str = "") -> List[str]:
    keys = []
    for item in error.errors():
        cause = (item.get("ctx") or {}).get("error")
        if isinstance(cause, InvalidParameterError):
            keys.append(cause.name)
        elif item["loc"]:
            keys.append(".".join(str(part) for part in item["loc"]))
        else:
            keys.append(prefix or "config")
    return list(dict.fromkeys(keys))


def _error_text(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        where = ".".join(str(part) for part in item["loc"]) or "config"
        if item["type"] == "missing":
            lines.append(f"missing required key '{where}'")
        else:
            lines.append(f"{where}: {item['msg']}")
    return "; ".join(lines)


def _validated(model, values: Dict[str, str], section: str):
    try:
        return model.model_validate(values)
    except ValidationError as exc:
        raise ConfigurationError(
            f"Invalid {section} configuration: {_error_text(exc)}",
            keys=_error_keys(exc, section),
        ) from exc


def read_key_values(path: Union[str, Path]) -> Dict[str, str]:
    """Read a dotenv-style key=value file; keys without a value are rejected."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}", keys=["config"])
    values = dotenv_values(path)
    empty = [key for key, value in values.items() if value is None]
    if empty:
        raise ConfigurationError(f"Keys without a value in {path}: {', '.join(empty)}", keys=empty)
    return {key.strip().lower(): value for key, value in values.items()}


def parse_config(
        path: Optional[Union[str, Path]] = None,
        overrides: Optional[Mapping[str, str]] = None,
        command: Optional[str] = None,
) -> RunConfig:
    """
    Build a validated RunConfig from a config file, inline key=value overrides and an
    optional command (which wins over a ``command`` key).

    Raises:
        ConfigurationError: unknown, missing or invalid keys (the keys are named).
    """
    values: Dict[str, str] = read_key_values(path) if path is not None else {}
    values.update({key.strip().lower(): value for key, value in (overrides or {}).items()})
    if command is not None:
        values["command"] = command

    if "command" not in values:
        raise ConfigurationError("missing required key 'command'", keys=["command"])
    try:
        cmd = Command(values.pop("command"))
    except ValueError as exc:
        choices = ", ".join(c.value for c in Command)
        raise ConfigurationError(f"Unknown command (choose from {choices})", keys=["command"]) from exc

    fmt = values.pop("format", OutputFormat.CSV.value)
    output_path = values.pop("output_path", None)
    list_key = _LIST_KEYS.get(cmd.value)
    list_value = values.pop(list_key, None) if list_key else None

    section_model = ContourParams if cmd is Command.CONTOUR else ExperimentSpec
    unknown = sorted(set(values) - set(section_model.model_fields))
    if unknown:
        raise ConfigurationError(
            f"Unknown key(s) for {cmd.value}: {', '.join(unknown)}", keys=unknown
        )
    section = _validated(section_model, values, cmd.value)

    if output_path is None:
        suffix = "json" if fmt == OutputFormat.JSON.value else "csv"
        output_path = str(Path(settings.output_dir) / f"{cmd.value}.{suffix}")

    payload = {
        "command": cmd,
        "output_path": output_path,
        "format": fmt,
        "contour" if cmd is Command.CONTOUR else "spec": section,
    }
    if list_key and list_value is not None:
        payload[list_key] = list_value
    config = _validated(RunConfig, payload, "run")
    logger.info("Parsed %s configuration (%d keys)", cmd.value, len(config.to_key_values()))
    return config
