"""Numerical services: scalar risk, state evolution, allocation, AMP.P and experiments."""

from app.services.scalar_risk import (
    a_least_favorable_mu,
    minimax_mse,
    mixture_risk,
    optimal_mixture_risk,
    scale_risk,
    soft_threshold,
    st_risk,
)
from app.services.power_alloc import (
    allocation_for,
    allocation_objective,
    optimal_allocation,
    uniform_allocation,
    validate_budget,
)
from app.services.state_evolution import (
    aggregate_minimax,
    contour_grid,
    convergence_check,
    evolve_tau,
    phase_transition_rho,
    predicted_mse,
    steady_state_tau,
)
from app.services.amp_engine import amp_p_step, count_support, run_amp

__all__ = [
    "a_least_favorable_mu",
    "minimax_mse",
    "mixture_risk",
    "optimal_mixture_risk",
    "scale_risk",
    "soft_threshold",
    "st_risk",
    "allocation_for",
    "allocation_objective",
    "optimal_allocation",
    "uniform_allocation",
    "validate_budget",
    "aggregate_minimax",
    "contour_grid",
    "convergence_check",
    "evolve_tau",
    "phase_transition_rho",
    "predicted_mse",
    "steady_state_tau",
    "amp_p_step",
    "count_support",
    "run_amp",
]
