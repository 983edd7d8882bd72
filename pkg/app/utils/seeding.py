"""Per-trial random generators."""
import numpy as np


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """
    Independent generator for one trial.

    The (seed, trial_index) pair is hashed by SeedSequence into its own
    stream, so trials can run in any order or in parallel and still
    reproduce bit for bit.
    """
    if seed < 0 or trial_index < 0:
        raise ValueError("seed and trial_index must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence([seed, trial_index]))
