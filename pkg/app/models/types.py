"""
Type definitions and enums.
"""
from enum import Enum

DIVERGENT_TOKEN = "divergent"


class AllocMode(str, Enum):
    """Column power allocation policies."""
    UNIFORM = "uniform"
    OPTIMAL = "optimal"


class Command(str, Enum):
    """Command-line commands, one per reproducible artifact."""
    THEORY = "theory"
    CONTOUR = "contour"
    SWEEP_RATIO = "sweep-ratio"
    SWEEP_NOISE = "sweep-noise"
    RUN = "run"


class OutputFormat(str, Enum):
    """Result file formats."""
    CSV = "csv"
    JSON = "json"
