"""
Block-sparse signal profiles, column power allocations and state-evolution predictions.
"""
import math
from typing import List, Optional

from pydantic import Field, model_validator

from app.models.base import BaseSchema
from app.models.priors import ThreePointPrior
from app.models.types import AllocMode

FRACTION_SUM_TOL = 1e-12


class Block(BaseSchema):
    """One block of the signal: the fraction of coordinates it covers and their common prior."""
    fraction: float = Field(..., gt=0.0, le=1.0, description="Fraction c_k of the n coordinates")
    prior: ThreePointPrior = Field(..., description="Prior shared by every coordinate of the block")


class BlockProfile(BaseSchema):
    """Non-uniformly sparse signal description together with the undersampling ratio.

    Attributes:
        blocks: ordered blocks whose fractions sum to one.
        delta: undersampling ratio m/n.
    """
    blocks: List[Block] = Field(..., min_length=1, description="Ordered signal blocks")
    delta: float = Field(..., gt=0.0, lt=1.0, description="Undersampling ratio m/n")

    @model_validator(mode="after")
    def check_fractions(self) -> "BlockProfile":
        total = math.fsum(block.fraction for block in self.blocks)
        if abs(total - 1.0) > FRACTION_SUM_TOL:
            raise ValueError(f"Block fractions must sum to 1 (got {total!r})")
        return self

    @property
    def fractions(self) -> List[float]:
        return [block.fraction for block in self.blocks]

    @property
    def epsilons(self) -> List[float]:
        return [block.prior.epsilon for block in self.blocks]

    @property
    def priors(self) -> List[ThreePointPrior]:
        return [block.prior for block in self.blocks]

    @classmethod
    def from_epsilons(
            cls,
            epsilons: List[float],
            fractions: List[float],
            delta: float,
            mus: Optional[List[float]] = None,
    ) -> "BlockProfile":
        """Build a profile from per-block nonzero probabilities (least favorable unless mus are given)."""
        if len(epsilons) != len(fractions):
            raise ValueError("epsilons and fractions must have the same length")
        mus = mus if mus is not None else [math.inf] * len(epsilons)
        return cls(
            blocks=[
                Block(fraction=c, prior=ThreePointPrior(epsilon=eps, mu=mu))
                for c, eps, mu in zip(fractions, epsilons, mus)
            ],
            delta=delta,
        )


class AllocationProfile(BaseSchema):
    """Per-block column variance sigma_k^2; every column of block k shares it."""
    sigma2_per_block: List[float] = Field(..., min_length=1, description="Column variance per block")

    @model_validator(mode="after")
    def check_positive(self) -> "AllocationProfile":
        for k, value in enumerate(self.sigma2_per_block):
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"sigma2_per_block[{k}] must be positive and finite (got {value!r})")
        return self


class Prediction(BaseSchema):
    """State-evolution prediction of the reconstruction MSE.

    ``mse is None`` is the divergent marker: above the phase transition the
    effective noise has no finite fixed point.
    """
    mse: Optional[float] = Field(None, ge=0.0, description="Predicted MSE per coordinate; None if divergent")
    tau2_per_block: List[float] = Field(default_factory=list, description="Steady-state effective noise per block")
    converges: bool = Field(..., description="Whether the state evolution has a finite fixed point")
    aggregate_m_sharp: float = Field(..., ge=0.0, description="Block-weighted minimax MSE")

    @model_validator(mode="after")
    def check_marker(self) -> "Prediction":
        if self.converges != (self.mse is not None):
            raise ValueError("mse must be set exactly when the state evolution converges")
        if any(t < 0 for t in self.tau2_per_block):
            raise ValueError("effective noise variances must be nonnegative")
        return self

    @property
    def is_divergent(self) -> bool:
        return self.mse is None


class ContourCell(BaseSchema):
    """One (rho, delta) point of a contour grid."""
    rho: float
    delta: float
    epsilons: Optional[List[float]] = Field(None, description="Block nonzero probabilities; None if inadmissible")
    inadmissible: bool = False
    prediction: Optional[Prediction] = None


class ContourGrid(BaseSchema):
    """Predicted MSE over a rectangular (rho, delta) grid plus the curves bounding it."""
    alloc_mode: AllocMode
    epsilon_ratio: float
    noise_var: float
    block_fractions: List[float]
    rho_values: List[float]
    delta_values: List[float]
    cells: List[ContourCell]
    phase_transition: List[Optional[float]] = Field(
        ..., description="Transition rho for each delta value; None where the inadmissible area is reached first"
    )
    inadmissible_boundary: List[float] = Field(..., description="Largest admissible rho for each delta value")
