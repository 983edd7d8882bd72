"""Core application components."""

from app.core.config import settings, get_settings
from app.core.exceptions import (
    AmpPowerError,
    ConfigurationError,
    InvalidParameterError,
    InadmissibleRegionError,
    NumericalError,
    DivergenceError,
    OutputWriteError,
)

__all__ = [
    "settings",
    "get_settings",
    "AmpPowerError",
    "ConfigurationError",
    "InvalidParameterError",
    "InadmissibleRegionError",
    "NumericalError",
    "DivergenceError",
    "OutputWriteError",
]
