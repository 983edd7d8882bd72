"""Mapping from (rho, delta, sparsity ratio) to per-block nonzero probabilities."""
from typing import List, Sequence

from app.core.exceptions import InadmissibleRegionError, InvalidParameterError

ADMISSIBLE_TOL = 1e-12


def split_epsilons(mean_eps: float, ratio: float, fractions: Sequence[float]) -> List[float]:
    """
    Split a mean nonzero probability across one or two blocks.

    With two blocks the first is `ratio` times denser than the second, so
    eps_2 = mean / (c_1*ratio + c_2) and eps_1 = ratio*eps_2. No admissibility check.
    """
    if len(fractions) == 1:
        return [mean_eps]
    if len(fractions) == 2:
        c1, c2 = fractions
        denom = c1 * ratio + c2
        return [mean_eps * ratio / denom, mean_eps / denom]
    raise InvalidParameterError("block_fractions", list(fractions), "only one or two blocks are supported")


def block_epsilons(rho: float, delta: float, ratio: float, fractions: Sequence[float]) -> List[float]:
    """
    Per-block nonzero probabilities for a sparsity measure rho = sum(eps_i)/m.

    The mean nonzero probability is rho*delta; see `split_epsilons` for the split.

    Raises:
        InvalidParameterError: nonpositive rho/ratio, delta outside (0, 1), or more than two blocks.
        InadmissibleRegionError: the densest block would reach probability 1.
    """
    if not rho > 0:
        raise InvalidParameterError("rho", rho, "must be positive")
    if not 0 < delta < 1:
        raise InvalidParameterError("delta", delta, "must lie in (0, 1)")
    if not ratio > 0:
        raise InvalidParameterError("epsilon_ratio", ratio, "must be positive")

    epsilons = split_epsilons(rho * delta, ratio, fractions)
    if max(epsilons) >= 1.0 - ADMISSIBLE_TOL:
        raise InadmissibleRegionError(epsilons=epsilons, rho=rho, delta=delta, ratio=ratio)
    return epsilons


def max_admissible_rho(delta: float, ratio: float, fractions: Sequence[float]) -> float:
    """The rho at which the densest block reaches probability 1 (edge of the inadmissible area)."""
    if len(fractions) == 1:
        return 1.0 / delta
    c1, c2 = fractions
    densest = max(ratio, 1.0)
    return (c1 * ratio + c2) / (densest * delta)
