"""
Scalar prior and minimax-result models.
"""
import math

from pydantic import ConfigDict, Field

from app.models.base import BaseSchema

# Spike magnitude of the least favorable prior.
LEAST_FAVORABLE_MU = math.inf


class ThreePointPrior(BaseSchema):
    """Mixture with mass 1-epsilon at zero and epsilon/2 at each of +mu and -mu.

    Attributes:
        epsilon: probability of a nonzero entry.
        mu: spike magnitude; ``LEAST_FAVORABLE_MU`` (+inf) marks the least favorable prior.
    """
    epsilon: float = Field(..., ge=0.0, le=1.0, description="Nonzero probability")
    mu: float = Field(default=LEAST_FAVORABLE_MU, ge=0.0, description="Spike magnitude (+inf: least favorable)")

    @property
    def is_least_favorable(self) -> bool:
        return math.isinf(self.mu)

    @classmethod
    def least_favorable(cls, epsilon: float) -> "ThreePointPrior":
        """Prior with the spikes pushed to infinity."""
        return cls(epsilon=epsilon, mu=LEAST_FAVORABLE_MU)


class MinimaxResult(BaseSchema):
    """Minimax MSE at unit noise and its optimal threshold multiplier."""
    model_config = ConfigDict(frozen=True)

    m_sharp: float = Field(..., ge=0.0, le=1.0, description="Minimax MSE at unit noise")
    alpha_star: float = Field(..., ge=0.0, description="Optimal threshold multiplier")
