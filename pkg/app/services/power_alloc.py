"""
Column power allocation under the total budget sum_k c_k sigma_k^2 = 1.
"""
import logging
import math
from typing import List, Sequence

from app.core.exceptions import InvalidParameterError
from app.models.profiles import AllocationProfile, BlockProfile
from app.models.types import AllocMode
from app.services.scalar_risk import minimax_mse

logger = logging.getLogger(__name__)

BUDGET_TOL = 1e-10


def _m_sharps(profile: BlockProfile) -> List[float]:
    return [minimax_mse(eps).m_sharp for eps in profile.epsilons]


def optimal_allocation(profile: BlockProfile) -> AllocationProfile:
    """
    Minimizer of sum_k c_k M#(eps_k)/sigma_k^2 under the budget.

    By Cauchy-Schwarz the optimum is sigma_k^2 = sqrt(M#_k) / sum_j c_j sqrt(M#_j).

    Raises:
        InvalidParameterError: a block has epsilon = 0 (it would receive zero power).
    """
    for k, eps in enumerate(profile.epsilons):
        if eps <= 0.0:
            raise InvalidParameterError(
                f"epsilons[{k}]", eps, "blocks with no nonzeros would get zero column power"
            )
    roots = [math.sqrt(m) for m in _m_sharps(profile)]
    norm = math.fsum(c * r for c, r in zip(profile.fractions, roots))
    sigma2 = [r / norm for r in roots]
    logger.debug("Optimal allocation for eps=%s: %s", profile.epsilons, sigma2)
    return AllocationProfile(sigma2_per_block=sigma2)


def uniform_allocation(profile: BlockProfile) -> AllocationProfile:
    """Every column at unit variance."""
    return AllocationProfile(sigma2_per_block=[1.0] * len(profile.blocks))


def allocation_for(mode: AllocMode, profile: BlockProfile) -> AllocationProfile:
    """Allocation selected by mode."""
    if AllocMode(mode) is AllocMode.OPTIMAL:
        return optimal_allocation(profile)
    return uniform_allocation(profile)


def allocation_objective(profile: BlockProfile, alloc: AllocationProfile) -> float:
    """Numerator of the predicted MSE: sum_k c_k M#(eps_k) / sigma_k^2."""
    if len(alloc.sigma2_per_block) != len(profile.blocks):
        raise InvalidParameterError(
            "sigma2_per_block", alloc.sigma2_per_block, f"expected {len(profile.blocks)} values"
        )
    return math.fsum(
        c * m / s2 for c, m, s2 in zip(profile.fractions, _m_sharps(profile), alloc.sigma2_per_block)
    )


def validate_budget(alloc: AllocationProfile, fractions: Sequence[float]) -> bool:
    """True iff every sigma_k^2 > 0 and sum_k c_k sigma_k^2 = 1 within 1e-10."""
    if len(alloc.sigma2_per_block) != len(fractions):
        return False
    if any(s2 <= 0.0 for s2 in alloc.sigma2_per_block):
        return False
    total = math.fsum(c * s2 for c, s2 in zip(fractions, alloc.sigma2_per_block))
    return abs(total - 1.0) <= BUDGET_TOL
