"""
Scalar soft-thresholding denoiser and its exact risk calculus.

All risks are for the scalar channel y = x + sigma*Z with Z standard normal
and the threshold written as theta = alpha*sigma. The closed forms follow from
the truncated Gaussian moments

    int_a^inf (z - c)^2 phi(z) dz = (1 + c^2) Q(a) + (a - 2c) phi(a),

with Q = 1 - Phi.
"""
import logging
import math
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from scipy import optimize, special

from app.core.exceptions import InvalidParameterError, NumericalError
from app.models.priors import MinimaxResult, ThreePointPrior

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Search interval of the threshold multiplier in the minimax problem.
ALPHA_BRACKET = (0.0, 10.0)
ALPHA_XTOL = 1e-10

# Grid points used to locate the global minimum of a finite-spike mixture risk.
MIXTURE_GRID_POINTS = 401

A_LEAST_FAVORABLE_RTOL = 1e-6


def _as_output(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def std_normal_pdf(z: ArrayLike) -> ArrayLike:
    """Standard normal density exp(-z^2/2)/sqrt(2*pi)."""
    z = np.asarray(z, dtype=float)
    return _as_output(_INV_SQRT_2PI * np.exp(-0.5 * z * z))


def std_normal_cdf(z: ArrayLike) -> ArrayLike:
    """Standard normal distribution function (scipy's ndtr, accurate deep into both tails)."""
    return _as_output(special.ndtr(np.asarray(z, dtype=float)))


def soft_threshold(y: ArrayLike, theta: ArrayLike) -> ArrayLike:
    """
    Soft thresholding eta(y; theta): y - theta above theta, y + theta below -theta, 0 in between.

    Works elementwise on arrays; theta may be a scalar or an array broadcastable to y.

    Raises:
        InvalidParameterError: if any threshold is negative.
    """
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(theta_arr < 0) or np.any(np.isnan(theta_arr)):
        raise InvalidParameterError("theta", theta, "threshold must be nonnegative")
    y_arr = np.asarray(y, dtype=float)
    return _as_output(np.sign(y_arr) * np.maximum(np.abs(y_arr) - theta_arr, 0.0))


def _check_alpha(alpha: ArrayLike) -> np.ndarray:
    alpha_arr = np.asarray(alpha, dtype=float)
    if np.any(alpha_arr < 0) or np.any(np.isnan(alpha_arr)):
        raise InvalidParameterError("alpha", alpha, "threshold multiplier must be nonnegative")
    return alpha_arr


def st_risk(mu: float, alpha: ArrayLike) -> ArrayLike:
    """
    Unit-noise risk E{(eta(mu + Z; alpha) - mu)^2} of a single spike at mu.

    mu = +inf is handled analytically: the threshold is always crossed, so the
    estimate carries bias alpha and unit variance.
    """
    if math.isnan(mu) or mu < 0:
        raise InvalidParameterError("mu", mu, "spike magnitude must be nonnegative")
    a = _check_alpha(alpha)
    if math.isinf(mu):
        return _as_output(1.0 + a * a)

    one_plus_a2 = 1.0 + a * a
    upper = one_plus_a2 * special.ndtr(mu - a) - (a + mu) * std_normal_pdf(a - mu)
    lower = one_plus_a2 * special.ndtr(-a - mu) + (mu - a) * std_normal_pdf(a + mu)
    dead_zone = mu * mu * (special.ndtr(a - mu) - special.ndtr(-a - mu))
    return _as_output(upper + lower + dead_zone)


def mixture_risk(prior: ThreePointPrior, alpha: ArrayLike) -> ArrayLike:
    """Unit-noise risk of the three-point mixture; both spikes share the same risk by symmetry."""
    eps = prior.epsilon
    zero_part = st_risk(0.0, alpha)
    if eps == 0.0:
        return zero_part
    spike_part = st_risk(prior.mu, alpha)
    if eps == 1.0:
        return spike_part
    return _as_output(eps * np.asarray(spike_part) + (1.0 - eps) * np.asarray(zero_part))


def scale_risk(prior: ThreePointPrior, alpha: ArrayLike, sigma2: float) -> ArrayLike:
    """Risk at noise variance sigma2 with threshold alpha*sigma, via M(p_mu, s2) = s2 * M(p_{mu/s}, 1)."""
    if not (sigma2 > 0 and math.isfinite(sigma2)):
        raise InvalidParameterError("sigma2", sigma2, "noise variance must be positive")
    scaled = ThreePointPrior(epsilon=prior.epsilon, mu=prior.mu / math.sqrt(sigma2))
    return _as_output(sigma2 * np.asarray(mixture_risk(scaled, alpha)))


def worst_case_risk(epsilon: float, alpha: ArrayLike) -> ArrayLike:
    """Risk under the least favorable prior: eps*(1 + alpha^2) + (1 - eps)*st_risk(0, alpha)."""
    return mixture_risk(ThreePointPrior.least_favorable(epsilon), alpha)


@lru_cache(maxsize=8192)
def _minimax(epsilon: float) -> MinimaxResult:
    if epsilon == 1.0:
        return MinimaxResult(m_sharp=1.0, alpha_star=0.0)

    result = optimize.minimize_scalar(
        lambda a: worst_case_risk(epsilon, a),
        bounds=ALPHA_BRACKET,
        method="bounded",
        options={"xatol": ALPHA_XTOL},
    )
    if not result.success:
        raise NumericalError(
            "Minimax threshold search did not converge",
            details={"epsilon": epsilon, "message": str(result.message)},
        )
    alpha_star = float(result.x)
    m_sharp = float(worst_case_risk(epsilon, alpha_star))
    logger.debug("minimax eps=%.6g: alpha*=%.10f M#=%.12f", epsilon, alpha_star, m_sharp)
    return MinimaxResult(m_sharp=min(m_sharp, 1.0), alpha_star=alpha_star)


def minimax_mse(epsilon: float) -> MinimaxResult:
    """
    Minimax MSE M#(eps) and optimal threshold multiplier alpha*(eps).

    Minimizes the worst-case risk over alpha in [0, 10] with a bounded
    golden-section/Brent search. eps = 1 is exact: (1, 0).

    Raises:
        InvalidParameterError: epsilon outside (0, 1].
    """
    epsilon = float(epsilon)
    if not 0.0 < epsilon <= 1.0:
        raise InvalidParameterError("epsilon", epsilon, "minimax MSE is defined for 0 < epsilon <= 1")
    return _minimax(epsilon)


def optimal_mixture_risk(prior: ThreePointPrior) -> Tuple[float, float]:
    """
    inf over alpha >= 0 of the unit-noise mixture risk, with the minimizing alpha.

    For finite spikes the risk can have its infimum at alpha -> inf (every
    spike killed, risk eps*mu^2); that case is reported with alpha = inf.
    A coarse grid picks the basin of the global minimum before a bounded
    refinement, since the finite-spike risk is not unimodal in alpha.
    """
    if prior.is_least_favorable:
        if prior.epsilon == 0.0:
            return 0.0, math.inf
        result = minimax_mse(prior.epsilon)
        return result.m_sharp, result.alpha_star

    kill_all = prior.epsilon * prior.mu * prior.mu
    if kill_all == 0.0:
        return 0.0, math.inf

    grid = np.linspace(0.0, prior.mu + 10.0, MIXTURE_GRID_POINTS)
    values = np.asarray(mixture_risk(prior, grid))
    i = int(np.argmin(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    result = optimize.minimize_scalar(
        lambda a: mixture_risk(prior, a),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": ALPHA_XTOL},
    )
    best_alpha, best_risk = float(grid[i]), float(values[i])
    if result.success and result.fun <= best_risk:
        best_alpha, best_risk = float(result.x), float(result.fun)
    # Ties (to rounding) go to the alpha -> inf limit.
    if kill_all <= best_risk * (1.0 + 1e-12):
        return kill_all, math.inf
    return best_risk, best_alpha


@lru_cache(maxsize=1024)
def _a_least_favorable_mu(epsilon: float, a: float) -> float:
    minimax = minimax_mse(epsilon)
    target = (1.0 - a) * minimax.m_sharp
    mu_cap = 1e3 * minimax.alpha_star + 1e3

    def gap(mu: float) -> float:
        return optimal_mixture_risk(ThreePointPrior(epsilon=epsilon, mu=mu))[0] - target

    hi = max(minimax.alpha_star, 1.0)
    while gap(hi) <= 0.0:
        hi *= 2.0
        if hi > mu_cap:
            raise NumericalError(
                "Could not bracket the a-least-favorable spike magnitude",
                details={"epsilon": epsilon, "a": a, "mu_cap": mu_cap},
            )
    lo = hi / 2.0 if hi > max(minimax.alpha_star, 1.0) else 0.0

    mu = optimize.brentq(gap, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=500)
    residual = abs(gap(mu)) / target
    if residual > A_LEAST_FAVORABLE_RTOL:
        raise NumericalError(
            "a-least-favorable spike magnitude failed its risk check",
            details={"epsilon": epsilon, "a": a, "mu": mu, "relative_gap": residual},
        )
    logger.debug("a-least-favorable eps=%.6g a=%.4g: mu=%.10f", epsilon, a, mu)
    return float(mu)


def a_least_favorable_mu(epsilon: float, a: float) -> float:
    """
    Spike magnitude mu whose optimally thresholded risk is (1 - a) * M#(eps).

    The optimized mixture risk grows with mu toward M#(eps), so the defining
    equation has a single root, found by bracketing and bisection-style
    root finding. The relative gap on the risk is checked to 1e-6.

    Raises:
        InvalidParameterError: epsilon or a outside (0, 1).
        NumericalError: no bracket within mu <= 1e3*alpha* + 1e3.
    """
    epsilon, a = float(epsilon), float(a)
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameterError("epsilon", epsilon, "must lie in (0, 1)")
    if not 0.0 < a < 1.0:
        raise InvalidParameterError("a", a, "must lie in (0, 1)")
    return _a_least_favorable_mu(epsilon, a)
