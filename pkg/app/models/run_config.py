"""
Run configuration models for the command-line front end.
"""
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import Field, field_validator, model_validator

from app.core.config import settings
from app.models.base import BaseSchema
from app.models.experiment import ExperimentSpec, split_list
from app.models.types import Command, OutputFormat

DEFAULT_RATIOS = [1.0, 5.0, 10.0, 50.0, 100.0]
DEFAULT_NOISE_VARS = [0.2, 0.4, 0.6, 0.8, 1.0]


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


class ContourParams(BaseSchema):
    """Grid of a contour run: rho and delta ranges plus the sparsity pattern and noise level."""
    rho_min: float = Field(..., gt=0.0)
    rho_max: float = Field(..., gt=0.0)
    delta_min: float = Field(..., gt=0.0, lt=1.0)
    delta_max: float = Field(..., gt=0.0, lt=1.0)
    resolution: int = Field(default_factory=lambda: settings.contour_resolution, ge=2, le=2000)
    epsilon_ratio: float = Field(100.0, gt=0.0)
    noise_var: float = Field(1.0, ge=0.0)
    block_fractions: List[float] = Field(default_factory=lambda: [0.5, 0.5], min_length=1, max_length=2)

    @field_validator("block_fractions", mode="before")
    @classmethod
    def parse_fractions(cls, v):
        return split_list(v)

    @model_validator(mode="after")
    def check_ranges(self) -> "ContourParams":
        if self.rho_min > self.rho_max:
            raise ValueError("rho_min must not exceed rho_max")
        if self.delta_min > self.delta_max:
            raise ValueError("delta_min must not exceed delta_max")
        return self


class RunConfig(BaseSchema):
    """Validated command, its parameters and where the results go.

    Attributes:
        command: what to compute.
        output_path: result file; the JSON mirror sits next to it with a .json suffix.
        format: csv (CSV plus JSON mirror) or json (JSON only).
        spec: experiment parameters (every command except contour).
        contour: grid parameters (contour only).
        ratios: sparsity ratios of a sweep-ratio run.
        noise_vars: noise variances of a sweep-noise run.
    """
    command: Command
    output_path: str = Field(..., min_length=1)
    format: OutputFormat = Field(OutputFormat.CSV)
    spec: Optional[ExperimentSpec] = None
    contour: Optional[ContourParams] = None
    ratios: List[float] = Field(default_factory=lambda: list(DEFAULT_RATIOS), min_length=1)
    noise_vars: List[float] = Field(default_factory=lambda: list(DEFAULT_NOISE_VARS), min_length=1)

    @field_validator("ratios", "noise_vars", mode="before")
    @classmethod
    def parse_lists(cls, v):
        return split_list(v)

    @model_validator(mode="after")
    def check_command_fields(self) -> "RunConfig":
        if self.command == Command.CONTOUR.value:
            if self.contour is None:
                raise ValueError("contour command needs grid parameters")
        elif self.spec is None:
            raise ValueError(f"{self.command} command needs experiment parameters")
        return self

    @property
    def path(self) -> Path:
        return Path(self.output_path)

    def to_key_values(self) -> Dict[str, str]:
        """
        Flat key=value view of the full configuration, defaults included.

        Parsing this mapping again yields an equal configuration.
        """
        out = {
            "command": _format_value(self.command),
            "output_path": self.output_path,
            "format": _format_value(self.format),
        }
        if self.command == Command.CONTOUR.value:
            params = self.contour.model_dump()
        else:
            params = self.spec.model_dump()
            if self.command == Command.SWEEP_RATIO.value:
                params["ratios"] = self.ratios
            elif self.command == Command.SWEEP_NOISE.value:
                params["noise_vars"] = self.noise_vars
        out.update({key: _format_value(value) for key, value in params.items()})
        return out
