"""Summary statistics for Monte Carlo tables."""
import math
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from app.models.experiment import LinearFit


def mean_and_stderr(values: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and its standard error (0 for a single value)."""
    data = np.sort(np.asarray(values, dtype=float))  # sorted: sum is independent of arrival order
    if data.size == 0:
        raise ValueError("cannot summarize an empty sample")
    mean = math.fsum(data) / data.size
    if data.size == 1:
        return mean, 0.0
    stderr = float(np.std(data, ddof=1)) / math.sqrt(data.size)
    return mean, stderr


def linear_fit(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Least-squares line y = slope*x + intercept with its coefficient of determination."""
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("a linear fit needs at least two paired points")
    result = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return LinearFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        r_squared=float(result.rvalue) ** 2,
    )
