"""
AMP.P: approximate message passing with per-column power scaling.

One step, with Theta = diag(sigma_i) the column standard deviations:

    r^t     = y - A x^t + (||x^t||_0 / m) r^{t-1}
    x^{t+1} = eta(x^t + Theta^{-2} A^T r^t;  Theta^{-1} theta^t)

and theta_i^t = alpha_{block(i)} * gamma_hat_t, gamma_hat_t = ||r^t|| / sqrt(m).
The threshold applied to coordinate i is therefore alpha * gamma_hat / sigma_i,
alpha times the effective noise std that coordinate sees. With unit column
variances this is the standard AMP iteration.
"""
import logging
from collections import deque
from typing import Optional, Tuple

import numpy as np

from app.core.exceptions import DivergenceError, InvalidParameterError
from app.models.amp import AmpConfig, AmpDiagnostics, AmpState, SensingOperator
from app.models.profiles import BlockProfile
from app.services.scalar_risk import soft_threshold

logger = logging.getLogger(__name__)

_NORM_FLOOR = 1e-12


def count_support(x: np.ndarray) -> int:
    """Number of nonzero coordinates (soft thresholding yields exact zeros)."""
    return int(np.count_nonzero(x))


def block_lengths(profile: BlockProfile, n: int) -> np.ndarray:
    """Coordinates per block for a length-n signal."""
    lengths = np.rint(np.asarray(profile.fractions) * n).astype(int)
    if lengths.sum() != n:
        raise InvalidParameterError("block_fractions", profile.fractions, f"do not split n={n} into whole blocks")
    return lengths


def _coordinate_alphas(profile: BlockProfile, config: AmpConfig, n: int) -> np.ndarray:
    if len(config.alpha_per_block) != len(profile.blocks):
        raise InvalidParameterError(
            "alpha_per_block", config.alpha_per_block, f"expected {len(profile.blocks)} values"
        )
    return np.repeat(np.asarray(config.alpha_per_block, dtype=float), block_lengths(profile, n))


def _require_finite(name: str, values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise DivergenceError(f"Non-finite values in {name}", details={"field": name})


def _step(
        state: AmpState,
        y: np.ndarray,
        op: SensingOperator,
        alphas: np.ndarray,
        onsager: bool,
) -> AmpState:
    residual = y - op.matrix @ state.x_t
    if onsager:
        residual = residual + (count_support(state.x_t) / op.m) * state.r_t
    gamma_hat = float(np.linalg.norm(residual) / np.sqrt(op.m))

    pseudo_data = state.x_t + (op.matrix.T @ residual) / op.column_variance
    thresholds = alphas * gamma_hat / np.sqrt(op.column_variance)
    x_next = soft_threshold(pseudo_data, thresholds)

    return AmpState(
        x_t=np.asarray(x_next, dtype=float),
        r_t=residual,
        r_prev=state.r_t,
        gamma_hat=gamma_hat,
        iter=state.iter + 1,
    )


def amp_p_step(
        state: AmpState,
        y: np.ndarray,
        op: SensingOperator,
        config: AmpConfig,
        profile: BlockProfile,
) -> AmpState:
    """
    One AMP.P iteration: residual with Onsager memory, then the scaled thresholding update.

    ``state.r_t`` is the previous residual r^{t-1}; the returned state holds r^t
    in ``r_t`` and x^{t+1} in ``x_t``.

    Raises:
        DivergenceError: non-finite values in y or the state.
        InvalidParameterError: shape mismatch between state, y and operator.
    """
    if y.shape != (op.m,) or state.x_t.shape != (op.n,) or state.r_t.shape != (op.m,):
        raise InvalidParameterError(
            "state", (y.shape, state.x_t.shape, state.r_t.shape), f"does not match a {op.m}x{op.n} operator"
        )
    _require_finite("y", y)
    _require_finite("x_t", state.x_t)
    _require_finite("r_t", state.r_t)
    return _step(state, y, op, _coordinate_alphas(profile, config, op.n), config.onsager)


def run_amp(
        y: np.ndarray,
        op: SensingOperator,
        profile: BlockProfile,
        config: AmpConfig,
        truth: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, AmpDiagnostics]:
    """
    Iterate AMP.P from x^0 = 0, r^{-1} = 0.

    Stops when ||x^{t+1} - x^t|| / max(||x^t||, 1e-12) < x_tol or after max_iter
    steps. Growth of gamma_hat by more than `divergence_factor` across
    `divergence_window` iterations, or a non-finite iterate, ends the run with
    ``diagnostics.diverged`` set; the last finite iterate is returned.

    Returns:
        The final estimate and the run diagnostics.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (op.m,):
        raise InvalidParameterError("y", y.shape, f"expected length {op.m}")
    if truth is not None and np.shape(truth) != (op.n,):
        raise InvalidParameterError("truth", np.shape(truth), f"expected length {op.n}")
    _require_finite("y", y)
    alphas = _coordinate_alphas(profile, config, op.n)

    state = AmpState.initial(op.m, op.n)
    recent = deque(maxlen=config.divergence_window + 1)
    gammas, supports, errors = [], [], []
    converged = diverged = False

    for _ in range(config.max_iter):
        nxt = _step(state, y, op, alphas, config.onsager)
        if not (np.isfinite(nxt.gamma_hat) and np.all(np.isfinite(nxt.x_t))):
            diverged = True
            logger.warning("AMP.P produced non-finite values at iteration %d", nxt.iter)
            break

        if config.record_trajectory:
            gammas.append(nxt.gamma_hat)
            supports.append(count_support(nxt.x_t))
            if truth is not None:
                errors.append(float(np.mean((nxt.x_t - truth) ** 2)))

        change = np.linalg.norm(nxt.x_t - state.x_t) / max(np.linalg.norm(state.x_t), _NORM_FLOOR)
        state = nxt
        if change < config.x_tol:
            converged = True
            break

        recent.append(state.gamma_hat)
        if len(recent) == recent.maxlen and recent[0] > 0.0 \
                and recent[-1] > config.divergence_factor * recent[0]:
            diverged = True
            logger.warning(
                "AMP.P diverging: gamma_hat grew from %.4g to %.4g over %d iterations",
                recent[0], recent[-1], config.divergence_window,
            )
            break

    logger.debug(
        "AMP.P stopped after %d iterations (converged=%s, diverged=%s, gamma_hat=%.4g)",
        state.iter, converged, diverged, state.gamma_hat,
    )
    diagnostics = AmpDiagnostics(
        iterations=state.iter,
        converged=converged,
        diverged=diverged,
        final_gamma_hat=state.gamma_hat,
        gamma_hat=gammas,
        support_size=supports,
        mse=errors,
    )
    return state.x_t, diagnostics
