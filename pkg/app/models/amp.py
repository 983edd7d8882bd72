"""
AMP.P runtime models: sensing operator, iteration state, configuration and diagnostics.
"""
from typing import List

import numpy as np
from pydantic import Field, field_validator, model_validator

from app.core.config import settings
from app.models.base import ArraySchema, BaseSchema


class SensingOperator(ArraySchema):
    """Dense m x n measurement matrix with the column variances it was drawn with."""
    matrix: np.ndarray
    column_variance: np.ndarray

    @model_validator(mode="after")
    def check_shapes(self) -> "SensingOperator":
        if self.matrix.ndim != 2:
            raise ValueError("matrix must be two-dimensional")
        m, n = self.matrix.shape
        if not m < n:
            raise ValueError(f"matrix must have fewer rows than columns (got {m}x{n})")
        if self.column_variance.shape != (n,):
            raise ValueError(f"column_variance must have length {n}")
        if not np.all(self.column_variance > 0):
            raise ValueError("column variances must be strictly positive")
        return self

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]


class AmpState(ArraySchema):
    """Iterate, residuals and effective-noise estimate after `iter` steps.

    ``r_t`` is the most recent residual, which the next step uses as its
    Onsager memory; ``r_prev`` is the residual before it.
    """
    x_t: np.ndarray
    r_t: np.ndarray
    r_prev: np.ndarray
    gamma_hat: float = Field(0.0, ge=0.0)
    iter: int = Field(0, ge=0)

    @model_validator(mode="after")
    def check_lengths(self) -> "AmpState":
        if self.r_t.shape != self.r_prev.shape:
            raise ValueError("residual vectors must have the same length")
        return self

    @classmethod
    def initial(cls, m: int, n: int) -> "AmpState":
        """x^0 = 0 and r^{-1} = 0."""
        return cls(x_t=np.zeros(n), r_t=np.zeros(m), r_prev=np.zeros(m))


class AmpConfig(BaseSchema):
    """Stopping rule and threshold policy of AMP.P."""
    max_iter: int = Field(default_factory=lambda: settings.amp_max_iter, ge=1)
    x_tol: float = Field(default_factory=lambda: settings.amp_x_tol, gt=0.0)
    alpha_per_block: List[float] = Field(..., min_length=1, description="Threshold multiplier per block")
    record_trajectory: bool = Field(True, description="Keep per-iteration diagnostics")
    onsager: bool = Field(True, description="Include the (1/m)||x||_0 r^{t-1} correction")
    divergence_factor: float = Field(default_factory=lambda: settings.amp_divergence_factor, gt=1.0)
    divergence_window: int = Field(default_factory=lambda: settings.amp_divergence_window, ge=1)

    @field_validator("alpha_per_block")
    @classmethod
    def check_alphas(cls, v: List[float]) -> List[float]:
        if any(not (a >= 0.0 and np.isfinite(a)) for a in v):
            raise ValueError("threshold multipliers must be finite and nonnegative")
        return v


class AmpDiagnostics(BaseSchema):
    """Outcome of one AMP.P run."""
    iterations: int = Field(..., ge=0)
    converged: bool
    diverged: bool = False
    final_gamma_hat: float = Field(..., ge=0.0)
    gamma_hat: List[float] = Field(default_factory=list)
    support_size: List[int] = Field(default_factory=list)
    mse: List[float] = Field(default_factory=list, description="Per-iteration MSE when the truth is known")
