"""Pydantic models."""

from app.models.base import ArraySchema, BaseSchema
from app.models.types import DIVERGENT_TOKEN, AllocMode, Command, OutputFormat
from app.models.priors import MinimaxResult, ThreePointPrior
from app.models.profiles import (
    AllocationProfile,
    Block,
    BlockProfile,
    ContourCell,
    ContourGrid,
    Prediction,
)
from app.models.amp import AmpConfig, AmpDiagnostics, AmpState, SensingOperator
from app.models.experiment import ExperimentSpec, LinearFit, SweepResult, TrialResult, TrialSummary
from app.models.run_config import ContourParams, RunConfig

__all__ = [
    "ArraySchema",
    "BaseSchema",
    "DIVERGENT_TOKEN",
    "AllocMode",
    "Command",
    "OutputFormat",
    "MinimaxResult",
    "ThreePointPrior",
    "AllocationProfile",
    "Block",
    "BlockProfile",
    "ContourCell",
    "ContourGrid",
    "Prediction",
    "AmpConfig",
    "AmpDiagnostics",
    "AmpState",
    "SensingOperator",
    "ExperimentSpec",
    "LinearFit",
    "SweepResult",
    "TrialResult",
    "TrialSummary",
    "ContourParams",
    "RunConfig",
]
