"""Custom exceptions for the toolkit."""
from typing import Any, Dict, Optional


class AmpPowerError(Exception):
    """Base exception for all toolkit errors."""

    def __init__(
            self,
            message: str,
            exit_code: int = 3,
            details: Optional[Dict[str, Any]] = None
    ):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)

    def __reduce__(self):
        # Subclass constructors take different arguments; rebuild through the base
        # so errors raised inside joblib workers survive pickling.
        return (_restore_error, (type(self), self.message, self.exit_code, self.details), self.__dict__)


def _restore_error(cls, message: str, exit_code: int, details: Dict[str, Any]) -> AmpPowerError:
    error = cls.__new__(cls)
    AmpPowerError.__init__(error, message, exit_code, details)
    return error


class ConfigurationError(AmpPowerError):
    """Raised when a run configuration is missing a key or holds an invalid value."""

    def __init__(self, message: str, keys: Optional[list] = None, details: Optional[Dict[str, Any]] = None):
        merged = dict(details or {})
        if keys:
            merged["keys"] = list(keys)
        super().__init__(message, exit_code=2, details=merged)
        self.keys = list(keys or [])


class InvalidParameterError(AmpPowerError, ValueError):
    """Raised when an argument violates a documented precondition."""

    def __init__(self, name: str, value: Any, reason: str):
        super().__init__(
            message=f"Invalid {name}={value!r}: {reason}",
            exit_code=2,
            details={"parameter": name, "value": value, "reason": reason}
        )
        self.name = name


class InadmissibleRegionError(InvalidParameterError):
    """Raised when the requested sparsity pattern pushes a block's nonzero probability to 1 or beyond."""

    def __init__(self, epsilons: list, rho: float, delta: float, ratio: float):
        super().__init__(
            name="epsilon_ratio",
            value=ratio,
            reason=(
                f"rho={rho:g}, delta={delta:g} give block nonzero probabilities {epsilons}; "
                "the densest block must stay below 1 (inadmissible region)"
            ),
        )
        self.details.update({"epsilons": epsilons, "rho": rho, "delta": delta})


class NumericalError(AmpPowerError):
    """Raised when a root or minimum cannot be bracketed or fails its post-check."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=3, details=details)


class DivergenceError(AmpPowerError):
    """Raised when non-finite values reach the reconstruction iteration."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=3, details=details)


class OutputWriteError(AmpPowerError):
    """Raised when a result file cannot be written."""

    def __init__(self, path: str, reason: str):
        super().__init__(
            message=f"Failed to write {path}: {reason}",
            exit_code=3,
            details={"path": path, "reason": reason}
        )
