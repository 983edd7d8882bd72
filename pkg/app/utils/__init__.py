"""Utility functions."""

from app.utils.seeding import trial_rng
from app.utils.sparsity import block_epsilons, max_admissible_rho, split_epsilons

__all__ = ["trial_rng", "block_epsilons", "max_admissible_rho", "split_epsilons"]
