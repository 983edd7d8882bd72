"""
Monte Carlo harness: signal, matrix and noise generation, seeded trials and sweeps.

Each trial draws from its own generator seeded by (spec.seed, trial_index), in
the fixed order signal, matrix, noise. Runs that differ only in allocation
mode therefore share signal, noise and the underlying standard normals of the
matrix.
"""
import logging
import math
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from app.core.config import settings
from app.core.exceptions import InadmissibleRegionError, InvalidParameterError
from app.models.amp import AmpConfig, SensingOperator
from app.models.experiment import ExperimentSpec, SweepResult, TrialResult, TrialSummary
from app.models.profiles import AllocationProfile, BlockProfile
from app.models.types import AllocMode
from app.services.amp_engine import block_lengths, run_amp
from app.services.power_alloc import allocation_for, optimal_allocation
from app.services.scalar_risk import a_least_favorable_mu, minimax_mse
from app.services.state_evolution import aggregate_minimax, phase_transition_rho, predicted_mse, steady_state_tau
from app.utils.seeding import trial_rng
from app.utils.sparsity import block_epsilons
from app.utils.stats import linear_fit, mean_and_stderr

logger = logging.getLogger(__name__)


# ============================================================================
# Profiles
# ============================================================================

def theory_profile(spec: ExperimentSpec) -> BlockProfile:
    """Least favorable profile of an experiment (what the predictions are computed for)."""
    return BlockProfile.from_epsilons(spec.epsilons, spec.block_fractions, spec.delta)


def _steady_tau2(spec: ExperimentSpec) -> Optional[List[float]]:
    if spec.noise_var == 0.0:
        return None
    profile = theory_profile(spec)
    return steady_state_tau(profile, allocation_for(spec.alloc_mode, profile), spec.noise_var)


def signal_profile(spec: ExperimentSpec) -> BlockProfile:
    """
    Profile with the a-least-favorable spike magnitude in every block.

    Spikes are scaled to the predicted steady-state effective noise of their
    block, mu_k = mu_a(eps_k) * tau_k, so each coordinate faces a scalar
    problem whose optimally thresholded risk is (1 - a) * M#(eps_k) * tau_k^2
    at every noise level.
    Noiseless or divergent settings keep the unit-noise magnitude.
    """
    epsilons = spec.epsilons
    mus = [a_least_favorable_mu(eps, spec.a_param) for eps in epsilons]
    tau2 = _steady_tau2(spec)
    if tau2 is not None:
        mus = [mu * math.sqrt(t2) for mu, t2 in zip(mus, tau2)]
    return BlockProfile.from_epsilons(epsilons, spec.block_fractions, spec.delta, mus=mus)


def amp_config_for(spec: ExperimentSpec, onsager: bool = True, record_trajectory: bool = False) -> AmpConfig:
    """AMP.P configuration with the minimax threshold multiplier of every block."""
    return AmpConfig(
        max_iter=spec.max_iter,
        x_tol=spec.x_tol,
        alpha_per_block=[minimax_mse(eps).alpha_star for eps in spec.epsilons],
        onsager=onsager,
        record_trajectory=record_trajectory,
    )


# ============================================================================
# Generators
# ============================================================================

def gen_signal(profile: BlockProfile, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Block-sparse three-point signal: in block k each coordinate is 0 w.p. 1 - eps_k
    and +mu_k or -mu_k w.p. eps_k/2 each.

    Raises:
        InvalidParameterError: a block has an infinite spike magnitude.
    """
    for k, prior in enumerate(profile.priors):
        if prior.is_least_favorable:
            raise InvalidParameterError(f"mu[{k}]", prior.mu, "cannot sample an infinite spike magnitude")

    parts = []
    for prior, length in zip(profile.priors, block_lengths(profile, n)):
        eps, mu = prior.epsilon, prior.mu
        parts.append(rng.choice([-mu, 0.0, mu], size=int(length), p=[eps / 2, 1.0 - eps, eps / 2]))
    return np.concatenate(parts)


def gen_matrix(
        alloc: AllocationProfile,
        fractions: Sequence[float],
        m: int,
        n: int,
        rng: np.random.Generator,
) -> SensingOperator:
    """Gaussian matrix whose entries in the columns of block k have variance sigma_k^2 / m."""
    lengths = np.rint(np.asarray(fractions) * n).astype(int)
    if lengths.sum() != n or len(lengths) != len(alloc.sigma2_per_block):
        raise InvalidParameterError("block_fractions", list(fractions), f"do not match n={n} and the allocation")
    column_variance = np.repeat(np.asarray(alloc.sigma2_per_block, dtype=float), lengths)
    matrix = rng.standard_normal((m, n)) * np.sqrt(column_variance / m)
    return SensingOperator(matrix=matrix, column_variance=column_variance)


# ============================================================================
# Trials
# ============================================================================

def run_trial(spec: ExperimentSpec, trial_index: int, onsager: bool = True) -> TrialResult:
    """
    One seeded realization: draw x, A, w; measure y = A x + w; reconstruct with AMP.P.

    A diverging reconstruction is reported as converged=False with the MSE of
    its last finite iterate.
    """
    rng = trial_rng(spec.seed, trial_index)
    profile = signal_profile(spec)
    alloc = allocation_for(spec.alloc_mode, profile)

    x = gen_signal(profile, spec.n, rng)
    op = gen_matrix(alloc, spec.block_fractions, spec.m, spec.n, rng)
    w = rng.standard_normal(spec.m) * math.sqrt(spec.noise_var)
    y = op.matrix @ x + w

    x_hat, diagnostics = run_amp(y, op, profile, amp_config_for(spec, onsager=onsager))

    sq_err = (x_hat - x) ** 2
    bounds = np.cumsum(np.concatenate([[0], block_lengths(profile, spec.n)]))
    per_block = [float(np.mean(sq_err[lo:hi])) for lo, hi in zip(bounds[:-1], bounds[1:])]
    return TrialResult(
        trial_index=trial_index,
        alloc_mode=spec.alloc_mode,
        mse=float(np.mean(sq_err)),
        iterations=diagnostics.iterations,
        converged=diagnostics.converged and not diagnostics.diverged,
        per_block_mse=per_block,
    )


def run_trials(
        spec: ExperimentSpec,
        onsager: bool = True,
        n_jobs: Optional[int] = None,
        progress: Optional[bool] = None,
) -> List[TrialResult]:
    """Run `spec.trials` independent trials in parallel; results are returned in trial order."""
    n_jobs = n_jobs if n_jobs is not None else settings.n_jobs
    progress = settings.show_progress if progress is None else progress
    mode = AllocMode(spec.alloc_mode).value

    logger.info("Running %d trials (n=%d, m=%d, rho=%g, ratio=%g, noise_var=%g, alloc=%s)",
                spec.trials, spec.n, spec.m, spec.rho, spec.epsilon_ratio, spec.noise_var, mode)
    # Warm the per-process caches before fanning out.
    signal_profile(spec)

    jobs = Parallel(n_jobs=n_jobs, return_as="generator")(
        delayed(run_trial)(spec, index, onsager) for index in range(spec.trials)
    )
    results = list(tqdm(jobs, total=spec.trials, desc=f"Trials ({mode})", unit="trial",
                        disable=not progress, leave=False))
    results.sort(key=lambda r: r.trial_index)
    return results


def summarize_trials(results: Sequence[TrialResult]) -> TrialSummary:
    """Mean, standard error, convergence rate and mean iteration count of a batch."""
    if not results:
        raise InvalidParameterError("results", [], "cannot summarize an empty batch")
    modes = {AllocMode(r.alloc_mode) for r in results}
    if len(modes) != 1:
        raise InvalidParameterError("results", sorted(m.value for m in modes), "mixes allocation modes")

    mse_mean, mse_stderr = mean_and_stderr([r.mse for r in results])
    return TrialSummary(
        alloc_mode=modes.pop(),
        trials=len(results),
        mse_mean=mse_mean,
        mse_stderr=mse_stderr,
        converged_fraction=sum(r.converged for r in results) / len(results),
        mean_iterations=math.fsum(r.iterations for r in results) / len(results),
    )


def _with(spec: ExperimentSpec, **changes: Any) -> ExperimentSpec:
    return ExperimentSpec.model_validate({**spec.model_dump(), **changes})


def _theory_mse(spec: ExperimentSpec, mode: AllocMode) -> Optional[float]:
    profile = theory_profile(spec)
    return predicted_mse(profile, allocation_for(mode, profile), spec.noise_var).mse


# ============================================================================
# Sweeps
# ============================================================================

def sweep_ratio(base_spec: ExperimentSpec, ratios: Sequence[float]) -> SweepResult:
    """
    Empirical and predicted MSE for each sparsity ratio under both allocation modes.

    Ratios that push the densest block to probability 1 are skipped and listed
    in ``inadmissible``.
    """
    rows: List[Dict[str, Any]] = []
    skipped: List[float] = []
    for ratio in ratios:
        if not ratio >= 1.0:
            raise InvalidParameterError("ratios", ratio, "sparsity ratios must be >= 1")
        try:
            block_epsilons(base_spec.rho, base_spec.delta, ratio, base_spec.block_fractions)
        except InadmissibleRegionError as exc:
            logger.warning("Skipping ratio %g: %s", ratio, exc.message)
            skipped.append(float(ratio))
            continue

        for mode in AllocMode:
            spec = _with(base_spec, epsilon_ratio=ratio, alloc_mode=mode)
            summary = summarize_trials(run_trials(spec))
            rows.append({
                "ratio": float(ratio),
                "alloc_mode": mode.value,
                "mse_mean": summary.mse_mean,
                "mse_stderr": summary.mse_stderr,
                "mse_theory": _theory_mse(spec, mode),
                "trials": summary.trials,
            })
            logger.info("ratio=%g %s: mse=%.5g +/- %.2g (theory %s)", ratio, mode.value,
                        summary.mse_mean, summary.mse_stderr, rows[-1]["mse_theory"])

    table = pd.DataFrame(rows, columns=["ratio", "alloc_mode", "mse_mean", "mse_stderr", "mse_theory", "trials"])
    return SweepResult(table=table, inadmissible=skipped)


def sweep_noise(base_spec: ExperimentSpec, noise_vars: Sequence[float]) -> SweepResult:
    """
    Empirical and predicted MSE per noise variance and allocation mode, with
    least-squares lines of MSE against noise variance.

    Fits are keyed ``empirical_<mode>`` and ``theory_<mode>``.
    """
    if len(noise_vars) < 2:
        raise InvalidParameterError("noise_vars", list(noise_vars), "need at least two noise levels to fit a line")
    for value in noise_vars:
        if not value > 0.0:
            raise InvalidParameterError("noise_vars", value, "noise variances must be positive")

    rows: List[Dict[str, Any]] = []
    for noise_var in noise_vars:
        for mode in AllocMode:
            spec = _with(base_spec, noise_var=noise_var, alloc_mode=mode)
            summary = summarize_trials(run_trials(spec))
            rows.append({
                "noise_var": float(noise_var),
                "alloc_mode": mode.value,
                "mse_mean": summary.mse_mean,
                "mse_stderr": summary.mse_stderr,
                "mse_theory": _theory_mse(spec, mode),
            })
            logger.info("noise_var=%g %s: mse=%.5g +/- %.2g", noise_var, mode.value,
                        summary.mse_mean, summary.mse_stderr)

    table = pd.DataFrame(rows, columns=["noise_var", "alloc_mode", "mse_mean", "mse_stderr", "mse_theory"])
    fits = {}
    for mode in AllocMode:
        sub = table[table["alloc_mode"] == mode.value]
        fits[f"empirical_{mode.value}"] = linear_fit(sub["noise_var"].tolist(), sub["mse_mean"].tolist())
        theory = sub["mse_theory"].tolist()
        if all(value is not None for value in theory):
            fits[f"theory_{mode.value}"] = linear_fit(sub["noise_var"].tolist(), theory)
    return SweepResult(table=table, fits=fits)


# ============================================================================
# Theory
# ============================================================================

def theory_table(spec: ExperimentSpec) -> SweepResult:
    """
    Per-block scalar quantities (M#, alpha*, a-least-favorable mu, optimal power)
    plus a summary row. Predictions come from `theory_summary`.

    The summary row carries the fraction-weighted epsilon, the aggregate M# and
    the budget sum_k c_k sigma_k^2.
    """
    profile = theory_profile(spec)
    optimal = optimal_allocation(profile)
    rows: List[Dict[str, Any]] = []
    for k, (eps, s2) in enumerate(zip(spec.epsilons, optimal.sigma2_per_block)):
        result = minimax_mse(eps)
        rows.append({
            "block": str(k + 1),
            "epsilon": eps,
            "m_sharp": result.m_sharp,
            "alpha_star": result.alpha_star,
            "mu_a": a_least_favorable_mu(eps, spec.a_param),
            "sigma2_opt": s2,
        })
    rows.append({
        "block": "summary",
        "epsilon": math.fsum(c * e for c, e in zip(spec.block_fractions, spec.epsilons)),
        "m_sharp": aggregate_minimax(profile),
        "alpha_star": None,
        "mu_a": None,
        "sigma2_opt": math.fsum(c * s2 for c, s2 in zip(spec.block_fractions, optimal.sigma2_per_block)),
    })
    table = pd.DataFrame(rows, columns=["block", "epsilon", "m_sharp", "alpha_star", "mu_a", "sigma2_opt"])
    return SweepResult(table=table)


def theory_summary(spec: ExperimentSpec) -> Dict[str, Any]:
    """Predicted MSE under both allocations, convergence flag and transition rho."""
    profile = theory_profile(spec)
    uniform = predicted_mse(profile, allocation_for(AllocMode.UNIFORM, profile), spec.noise_var)
    optimal = predicted_mse(profile, allocation_for(AllocMode.OPTIMAL, profile), spec.noise_var)
    try:
        transition: Optional[float] = phase_transition_rho(spec.delta, spec.epsilon_ratio, spec.block_fractions)
    except InadmissibleRegionError:
        transition = None
    return {
        "mse_uniform": uniform.mse,
        "mse_optimal": optimal.mse,
        "converges": uniform.converges,
        "aggregate_m_sharp": uniform.aggregate_m_sharp,
        "phase_transition_rho": transition,
        "tau2_uniform": uniform.tau2_per_block,
        "tau2_optimal": optimal.tau2_per_block,
    }
