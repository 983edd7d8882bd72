"""
Monte Carlo experiment models.
"""
import math
from typing import Dict, List

import pandas as pd
from pydantic import Field, field_validator, model_validator

from app.core.config import settings
from app.models.base import ArraySchema, BaseSchema
from app.models.types import AllocMode
from app.utils.sparsity import block_epsilons

BLOCK_LENGTH_TOL = 1e-9


def split_list(v):
    """Accept comma-separated strings for list-valued keys."""
    if isinstance(v, str):
        return [item.strip() for item in v.split(",") if item.strip()]
    return v


class ExperimentSpec(BaseSchema):
    """One Monte Carlo configuration: problem size, sparsity pattern, noise, allocation and trial budget.

    Attributes:
        n: signal length.
        m: number of measurements (m < n).
        block_fractions: fraction of coordinates in each block.
        epsilon_ratio: eps_1 / eps_2 for two blocks (ignored for one block).
        rho: sparsity measure sum(eps_i)/m.
        noise_var: measurement noise variance sigma^2.
        a_param: gap of the a-least-favorable prior.
        trials: number of independent trials.
        seed: base seed of the per-trial generators.
        alloc_mode: column power allocation.
        max_iter: AMP.P iteration cap.
        x_tol: AMP.P relative-change stopping tolerance.
    """
    n: int = Field(..., gt=1, description="Signal length")
    m: int = Field(..., ge=1, description="Number of measurements")
    block_fractions: List[float] = Field(default_factory=lambda: [0.5, 0.5], min_length=1, max_length=2)
    epsilon_ratio: float = Field(1.0, gt=0.0, description="Sparsity ratio eps_1/eps_2")
    rho: float = Field(..., gt=0.0, description="Sparsity measure sum(eps_i)/m")
    noise_var: float = Field(0.0, ge=0.0, description="Measurement noise variance")
    a_param: float = Field(default_factory=lambda: settings.default_a_param, gt=0.0, lt=1.0)
    trials: int = Field(default_factory=lambda: settings.default_trials, ge=1)
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0, lt=2**64)
    alloc_mode: AllocMode = Field(AllocMode.OPTIMAL)
    max_iter: int = Field(default_factory=lambda: settings.amp_max_iter, ge=1)
    x_tol: float = Field(default_factory=lambda: settings.amp_x_tol, gt=0.0)

    @field_validator("block_fractions", mode="before")
    @classmethod
    def parse_fractions(cls, v):
        return split_list(v)

    @model_validator(mode="after")
    def check_consistency(self) -> "ExperimentSpec":
        if not self.m < self.n:
            raise ValueError(f"m must be smaller than n (got m={self.m}, n={self.n})")
        total = math.fsum(self.block_fractions)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"block_fractions must sum to 1 (got {total!r})")
        for c in self.block_fractions:
            length = c * self.n
            if c <= 0 or abs(length - round(length)) > BLOCK_LENGTH_TOL:
                raise ValueError(f"block fraction {c} does not give an integer block length for n={self.n}")
        # Raises InadmissibleRegionError (a ValueError) for eps_1 >= 1.
        block_epsilons(self.rho, self.delta, self.epsilon_ratio, self.block_fractions)
        return self

    @property
    def delta(self) -> float:
        return self.m / self.n

    @property
    def epsilons(self) -> List[float]:
        return block_epsilons(self.rho, self.delta, self.epsilon_ratio, self.block_fractions)

    @property
    def block_lengths(self) -> List[int]:
        return [int(round(c * self.n)) for c in self.block_fractions]


class TrialResult(BaseSchema):
    """Outcome of a single seeded trial."""
    trial_index: int = Field(..., ge=0)
    alloc_mode: AllocMode
    mse: float = Field(..., ge=0.0, description="||x_hat - x||^2 / n")
    iterations: int = Field(..., ge=0)
    converged: bool
    per_block_mse: List[float] = Field(..., description="Per-block ||x_hat_k - x_k||^2 / n_k")


class TrialSummary(BaseSchema):
    """Aggregate of a batch of trials under one allocation mode."""
    alloc_mode: AllocMode
    trials: int = Field(..., ge=1)
    mse_mean: float = Field(..., ge=0.0)
    mse_stderr: float = Field(..., ge=0.0)
    converged_fraction: float = Field(..., ge=0.0, le=1.0)
    mean_iterations: float = Field(..., ge=0.0)


class LinearFit(BaseSchema):
    """Least-squares line and its coefficient of determination."""
    slope: float
    intercept: float
    r_squared: float


class SweepResult(ArraySchema):
    """Table produced by a parameter sweep plus the fits and skipped points that go with it."""
    table: pd.DataFrame
    fits: Dict[str, LinearFit] = Field(default_factory=dict)
    inadmissible: List[float] = Field(default_factory=list)
