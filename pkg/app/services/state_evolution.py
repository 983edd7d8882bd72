"""
Closed-form state-evolution predictions for AMP.P under the minimax threshold.

With the threshold tuned to alpha*(eps_k) and the least favorable prior, the
per-block effective noise satisfies tau_k^2 * sigma_k^2 = gamma^2 for a common
gamma^2, and

    gamma^2 = (1/delta) * sum_k c_k M#(eps_k) * gamma^2 + noise_var.

Everything below follows from that scalar fixed point.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from app.core.config import settings
from app.core.exceptions import InadmissibleRegionError, InvalidParameterError, NumericalError
from app.models.profiles import AllocationProfile, BlockProfile, ContourCell, ContourGrid, Prediction
from app.models.types import AllocMode
from app.services.power_alloc import allocation_for
from app.services.scalar_risk import minimax_mse
from app.utils.sparsity import block_epsilons, max_admissible_rho, split_epsilons

logger = logging.getLogger(__name__)

FIXED_POINT_RTOL = 1e-10
TRANSITION_TOL = 1e-8


def aggregate_minimax(profile: BlockProfile) -> float:
    """Block-weighted minimax MSE sum_k c_k M#(eps_k)."""
    total = 0.0
    for c, eps in zip(profile.fractions, profile.epsilons):
        if eps > 0.0:
            total += c * minimax_mse(eps).m_sharp
    return min(total, 1.0)


def convergence_check(profile: BlockProfile) -> bool:
    """True iff the state evolution has a finite fixed point (aggregate/delta < 1)."""
    return aggregate_minimax(profile) / profile.delta < 1.0


def _check_inputs(profile: BlockProfile, alloc: AllocationProfile, noise_var: float) -> None:
    if len(alloc.sigma2_per_block) != len(profile.blocks):
        raise InvalidParameterError(
            "sigma2_per_block", alloc.sigma2_per_block, f"expected {len(profile.blocks)} values"
        )
    if not (noise_var >= 0.0 and math.isfinite(noise_var)):
        raise InvalidParameterError("noise_var", noise_var, "must be finite and nonnegative")


def _fixed_point_residual(
        profile: BlockProfile, alloc: AllocationProfile, noise_var: float, tau2: Sequence[float]
) -> float:
    m_sharps = [minimax_mse(eps).m_sharp if eps > 0 else 0.0 for eps in profile.epsilons]
    feedback = math.fsum(
        c * s2 * m * t2
        for c, s2, m, t2 in zip(profile.fractions, alloc.sigma2_per_block, m_sharps, tau2)
    ) / profile.delta
    worst = 0.0
    for s2, t2 in zip(alloc.sigma2_per_block, tau2):
        rhs = (feedback + noise_var) / s2
        scale = max(abs(t2), abs(rhs))
        if scale > 0.0:
            worst = max(worst, abs(t2 - rhs) / scale)
    return worst


def steady_state_tau(
        profile: BlockProfile, alloc: AllocationProfile, noise_var: float
) -> Optional[List[float]]:
    """
    Steady-state effective noise per block, tau_k^2 = (noise_var/sigma_k^2) / (1 - aggregate/delta).

    Returns None (divergent) when the state evolution has no finite fixed point.
    The result is substituted back into the fixed-point equation and checked.

    Raises:
        NumericalError: fixed-point residual above 1e-10.
    """
    _check_inputs(profile, alloc, noise_var)
    aggregate = aggregate_minimax(profile)
    load = aggregate / profile.delta
    if load >= 1.0:
        return None

    gamma2 = noise_var / (1.0 - load)
    tau2 = [gamma2 / s2 for s2 in alloc.sigma2_per_block]
    residual = _fixed_point_residual(profile, alloc, noise_var, tau2)
    if residual > FIXED_POINT_RTOL:
        raise NumericalError(
            "State-evolution fixed point failed its residual check",
            details={"residual": residual, "tau2": tau2},
        )
    return tau2


def predicted_mse(profile: BlockProfile, alloc: AllocationProfile, noise_var: float) -> Prediction:
    """
    Predicted reconstruction MSE per coordinate:

        [sum_k c_k M#(eps_k)/sigma_k^2] / (1 - aggregate/delta) * noise_var

    Above the phase transition the prediction carries the divergent marker.
    """
    _check_inputs(profile, alloc, noise_var)
    aggregate = aggregate_minimax(profile)
    tau2 = steady_state_tau(profile, alloc, noise_var)
    if tau2 is None:
        return Prediction(mse=None, tau2_per_block=[], converges=False, aggregate_m_sharp=aggregate)

    numerator = math.fsum(
        c * minimax_mse(eps).m_sharp / s2
        for c, eps, s2 in zip(profile.fractions, profile.epsilons, alloc.sigma2_per_block)
        if eps > 0.0
    )
    mse = numerator / (1.0 - aggregate / profile.delta) * noise_var
    return Prediction(mse=mse, tau2_per_block=tau2, converges=True, aggregate_m_sharp=aggregate)


def evolve_tau(
        profile: BlockProfile,
        alloc: AllocationProfile,
        noise_var: float,
        gamma2_init: float,
        iterations: int,
) -> List[List[float]]:
    """
    Transient state evolution from gamma_0^2 = gamma2_init.

    Returns tau_{t,k}^2 = gamma_t^2 / sigma_k^2 for t = 0..iterations. Converges to
    `steady_state_tau` below the phase transition and grows without bound above it.
    """
    _check_inputs(profile, alloc, noise_var)
    if gamma2_init < 0.0 or iterations < 0:
        raise InvalidParameterError("gamma2_init", gamma2_init, "needs gamma2_init >= 0 and iterations >= 0")

    load = aggregate_minimax(profile) / profile.delta
    gamma2 = gamma2_init
    history = []
    for _ in range(iterations + 1):
        history.append([gamma2 / s2 for s2 in alloc.sigma2_per_block])
        gamma2 = load * gamma2 + noise_var
    return history


def phase_transition_rho(
        delta: float, sparsity_ratio: float, block_fractions: Sequence[float] = (0.5, 0.5)
) -> float:
    """
    Sparsity measure rho at which sum_k c_k M#(eps_k(rho)) = delta.

    Independent of the power allocation.

    Raises:
        InadmissibleRegionError: the densest block reaches probability 1 before the boundary.
    """
    if not 0.0 < delta < 1.0:
        raise InvalidParameterError("delta", delta, "must lie in (0, 1)")
    if not sparsity_ratio > 0.0:
        raise InvalidParameterError("epsilon_ratio", sparsity_ratio, "must be positive")

    fractions = list(block_fractions)

    def excess(rho: float) -> float:
        epsilons = [min(eps, 1.0) for eps in split_epsilons(rho * delta, sparsity_ratio, fractions)]
        return math.fsum(c * minimax_mse(eps).m_sharp for c, eps in zip(fractions, epsilons)) - delta

    rho_max = max_admissible_rho(delta, sparsity_ratio, fractions)
    if excess(rho_max) <= 0.0:
        edge = [min(eps, 1.0) for eps in split_epsilons(rho_max * delta, sparsity_ratio, fractions)]
        raise InadmissibleRegionError(epsilons=edge, rho=rho_max, delta=delta, ratio=sparsity_ratio)

    rho = optimize.brentq(excess, rho_max * 1e-12, rho_max, xtol=1e-14, rtol=1e-15, maxiter=500)
    gap = abs(excess(rho))
    if gap > TRANSITION_TOL:
        raise NumericalError(
            "Phase-transition root failed its post-check",
            details={"delta": delta, "ratio": sparsity_ratio, "rho": rho, "gap": gap},
        )
    return float(rho)


def _grid_axis(name: str, bounds: Tuple[float, float], resolution: int) -> List[float]:
    lo, hi = bounds
    if not 0.0 < lo <= hi:
        raise InvalidParameterError(name, bounds, "needs 0 < low <= high")
    return [float(v) for v in np.linspace(lo, hi, resolution)]


def contour_grid(
        rho_range: Tuple[float, float],
        delta_range: Tuple[float, float],
        sparsity_ratio: float,
        noise_var: float,
        alloc_mode: AllocMode,
        block_fractions: Sequence[float] = (0.5, 0.5),
        resolution: Optional[int] = None,
) -> ContourGrid:
    """
    Predicted MSE over a rectangular (rho, delta) grid.

    Cells are ordered delta-major (all rho for the first delta, then the next).
    Inadmissible cells are marked, not raised; cells past the transition carry
    the divergent marker. The transition rho and the inadmissible edge are
    reported per delta.
    """
    resolution = resolution or settings.contour_resolution
    if resolution < 2:
        raise InvalidParameterError("resolution", resolution, "needs at least two points per axis")
    rho_values = _grid_axis("rho_range", rho_range, resolution)
    delta_values = _grid_axis("delta_range", delta_range, resolution)
    if delta_values[-1] >= 1.0:
        raise InvalidParameterError("delta_range", delta_range, "must lie in (0, 1)")
    fractions = list(block_fractions)

    cells: List[ContourCell] = []
    transition: List[Optional[float]] = []
    boundary: List[float] = []
    for delta in delta_values:
        boundary.append(max_admissible_rho(delta, sparsity_ratio, fractions))
        try:
            transition.append(phase_transition_rho(delta, sparsity_ratio, fractions))
        except InadmissibleRegionError:
            transition.append(None)

        for rho in rho_values:
            try:
                epsilons = block_epsilons(rho, delta, sparsity_ratio, fractions)
            except InadmissibleRegionError:
                cells.append(ContourCell(rho=rho, delta=delta, inadmissible=True))
                continue
            profile = BlockProfile.from_epsilons(epsilons, fractions, delta)
            prediction = predicted_mse(profile, allocation_for(alloc_mode, profile), noise_var)
            cells.append(ContourCell(rho=rho, delta=delta, epsilons=epsilons, prediction=prediction))

    logger.info(
        "Contour grid %dx%d (%s, ratio=%g): %d inadmissible, %d divergent",
        resolution, resolution, AllocMode(alloc_mode).value, sparsity_ratio,
        sum(cell.inadmissible for cell in cells),
        sum(cell.prediction is not None and cell.prediction.is_divergent for cell in cells),
    )
    return ContourGrid(
        alloc_mode=alloc_mode,
        epsilon_ratio=sparsity_ratio,
        noise_var=noise_var,
        block_fractions=fractions,
        rho_values=rho_values,
        delta_values=delta_values,
        cells=cells,
        phase_transition=transition,
        inadmissible_boundary=boundary,
    )
