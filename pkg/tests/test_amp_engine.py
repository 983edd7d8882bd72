"""Tests for the AMP.P iteration."""
import math

import numpy as np
import pytest

from app.core.exceptions import DivergenceError, InvalidParameterError
from app.models.amp import AmpConfig, AmpState, SensingOperator
from app.models.experiment import ExperimentSpec
from app.models.profiles import AllocationProfile, BlockProfile
from app.models.types import AllocMode
from app.services import amp_engine
from app.services.amp_engine import amp_p_step, count_support, run_amp
from app.services.experiment import (
    amp_config_for,
    gen_matrix,
    gen_signal,
    signal_profile,
    theory_profile,
)
from app.services.power_alloc import allocation_for
from app.services.scalar_risk import minimax_mse
from app.services.state_evolution import aggregate_minimax
from app.utils.seeding import trial_rng


def standard_amp(y, A, alpha, steps):
    """Straight-line AMP: x <- eta(x + A^T r; alpha*||r||/sqrt(m)), r <- y - A x + (||x||_0/m) r."""
    m, n = A.shape
    x = np.zeros(n)
    r_prev = np.zeros(m)
    for _ in range(steps):
        r = y - A @ x + (np.count_nonzero(x) / m) * r_prev
        theta = alpha * (np.linalg.norm(r) / np.sqrt(m))
        v = x + (A.T @ r) / 1.0
        x = np.sign(v) * np.maximum(np.abs(v) - theta / 1.0, 0.0)
        r_prev = r
    return x


def single_block(eps: float, delta: float) -> BlockProfile:
    return BlockProfile.from_epsilons([eps], [1.0], delta)


class TestCountSupport:
    def test_zero_vector(self):
        assert count_support(np.zeros(10)) == 0

    def test_signed_entries(self):
        x = np.zeros(20)
        x[[1, 4, 7]] = [1.0, -1.0, 1.0]
        assert count_support(x) == 3

    def test_tiny_values_count(self):
        assert count_support(np.array([1e-300, 0.0, -5e-324])) == 2


class TestStep:
    def _instance(self):
        A = np.array([
            [0.5, -0.2, 0.1, 0.4, -0.3, 0.2, 0.0, 0.6],
            [0.3, 0.7, -0.5, 0.1, 0.2, -0.4, 0.5, -0.1],
            [-0.6, 0.2, 0.3, -0.2, 0.5, 0.1, -0.3, 0.2],
            [0.1, -0.4, 0.6, 0.3, -0.1, 0.5, 0.2, -0.5],
        ])
        variance = np.array([2.0, 2.0, 2.0, 2.0, 0.5, 0.5, 0.5, 0.5])
        op = SensingOperator(matrix=A, column_variance=variance)
        profile = BlockProfile.from_epsilons([0.4, 0.1], [0.5, 0.5], delta=0.5)
        config = AmpConfig(alpha_per_block=[0.8, 1.6])
        y = np.array([1.0, -0.5, 0.25, 2.0])
        x_t = np.array([0.0, 1.2, 0.0, -0.4, 0.0, 0.0, 0.3, 0.0])
        r_prev = np.array([0.2, -0.1, 0.4, 0.3])
        state = AmpState(x_t=x_t, r_t=r_prev, r_prev=np.zeros(4), gamma_hat=0.0, iter=3)
        return op, profile, config, y, state

    def test_matches_direct_transcription(self):
        op, profile, config, y, state = self._instance()
        out = amp_p_step(state, y, op, config, profile)

        # r^t = y - A x^t + (1/m)||x^t||_0 r^{t-1};  x^{t+1} = eta(x^t + Theta^-2 A^T r^t; Theta^-1 alpha gamma_hat)
        A, x, r_prev = op.matrix, state.x_t, state.r_t
        r = y - A @ x + (3 / 4) * r_prev
        gamma = np.sqrt(np.sum(r ** 2) / 4)
        alphas = np.array([0.8] * 4 + [1.6] * 4)
        sigma = np.sqrt(op.column_variance)
        v = x + (A.T @ r) / sigma ** 2
        expected = np.sign(v) * np.maximum(np.abs(v) - alphas * gamma / sigma, 0.0)

        np.testing.assert_allclose(out.r_t, r, rtol=0, atol=1e-14)
        np.testing.assert_allclose(out.x_t, expected, rtol=0, atol=1e-14)
        np.testing.assert_array_equal(out.r_prev, r_prev)
        assert out.gamma_hat == pytest.approx(gamma, rel=1e-14)
        assert out.iter == 4

    def test_without_onsager_term(self):
        op, profile, config, y, state = self._instance()
        plain = config.model_copy(update={"onsager": False})
        out = amp_p_step(state, y, op, plain, profile)
        np.testing.assert_allclose(out.r_t, y - op.matrix @ state.x_t, atol=1e-15)

    def test_noiseless_truth_is_fixed_point(self, rng):
        n, m = 40, 20
        alloc = AllocationProfile(sigma2_per_block=[1.6, 0.4])
        op = gen_matrix(alloc, [0.5, 0.5], m, n, rng)
        profile = BlockProfile.from_epsilons([0.2, 0.05], [0.5, 0.5], delta=0.5)
        x = np.zeros(n)
        x[[2, 9, 30]] = [1.5, -2.0, 0.7]
        y = op.matrix @ x
        state = AmpState(x_t=x.copy(), r_t=np.zeros(m), r_prev=np.zeros(m))
        out = amp_p_step(state, y, op, AmpConfig(alpha_per_block=[1.0, 2.0]), profile)
        assert out.gamma_hat == 0.0
        np.testing.assert_array_equal(out.r_t, np.zeros(m))
        np.testing.assert_array_equal(out.x_t, x)

    def test_non_finite_input(self):
        op, profile, config, y, state = self._instance()
        y = y.copy()
        y[0] = np.nan
        with pytest.raises(DivergenceError):
            amp_p_step(state, y, op, config, profile)

    def test_shape_mismatch(self):
        op, profile, config, y, state = self._instance()
        with pytest.raises(InvalidParameterError):
            amp_p_step(state, y[:3], op, config, profile)

    def test_alpha_count_must_match_blocks(self):
        op, profile, _, y, state = self._instance()
        with pytest.raises(InvalidParameterError):
            amp_p_step(state, y, op, AmpConfig(alpha_per_block=[1.0]), profile)


class TestStandardReduction:
    def test_unit_variances_reproduce_standard_amp(self):
        rng = np.random.default_rng(314)
        m, n, eps = 500, 1000, 0.05
        alloc = AllocationProfile(sigma2_per_block=[1.0])
        op = gen_matrix(alloc, [1.0], m, n, rng)
        x = rng.choice([-1.0, 0.0, 1.0], size=n, p=[eps / 2, 1 - eps, eps / 2])
        y = op.matrix @ x + 0.1 * rng.standard_normal(m)

        alpha = minimax_mse(eps).alpha_star
        profile = single_block(eps, m / n)
        config = AmpConfig(alpha_per_block=[alpha])
        state = AmpState.initial(m, n)
        for _ in range(50):
            state = amp_p_step(state, y, op, config, profile)

        np.testing.assert_allclose(state.x_t, standard_amp(y, op.matrix, alpha, 50), rtol=0, atol=1e-10)


class TestRunAmp:
    def test_zero_measurements(self, rng):
        op = gen_matrix(AllocationProfile(sigma2_per_block=[1.0]), [1.0], 30, 60, rng)
        x_hat, diag = run_amp(np.zeros(30), op, single_block(0.1, 0.5), AmpConfig(alpha_per_block=[1.0]))
        np.testing.assert_array_equal(x_hat, np.zeros(60))
        assert diag.converged and diag.iterations == 1 and not diag.diverged

    def test_noiseless_recovery_with_trajectory(self):
        rng = np.random.default_rng(11)
        m, n, eps = 250, 500, 0.05
        profile = single_block(eps, m / n)
        op = gen_matrix(AllocationProfile(sigma2_per_block=[1.0]), [1.0], m, n, rng)
        x = rng.choice([-1.0, 0.0, 1.0], size=n, p=[eps / 2, 1 - eps, eps / 2])
        config = AmpConfig(alpha_per_block=[minimax_mse(eps).alpha_star], max_iter=500, x_tol=1e-8)
        x_hat, diag = run_amp(op.matrix @ x, op, profile, config, truth=x)

        assert diag.converged
        assert np.mean((x_hat - x) ** 2) < 1e-8
        assert len(diag.gamma_hat) == len(diag.support_size) == len(diag.mse) == diag.iterations
        assert diag.mse[-1] < diag.mse[0]

    def test_trajectory_can_be_skipped(self, rng):
        op = gen_matrix(AllocationProfile(sigma2_per_block=[1.0]), [1.0], 30, 60, rng)
        y = rng.standard_normal(30)
        config = AmpConfig(alpha_per_block=[1.0], record_trajectory=False, max_iter=5)
        _, diag = run_amp(y, op, single_block(0.1, 0.5), config)
        assert diag.gamma_hat == [] and diag.support_size == [] and diag.mse == []

    @pytest.mark.parametrize("mode", list(AllocMode))
    def test_steady_state_residual_matches_prediction(self, mode):
        spec = ExperimentSpec(n=2000, m=1000, rho=0.1, epsilon_ratio=5.0, noise_var=0.5, alloc_mode=mode,
                              seed=3, max_iter=300)
        rng = trial_rng(spec.seed, 0)
        profile = signal_profile(spec)
        alloc = allocation_for(spec.alloc_mode, profile)
        x = gen_signal(profile, spec.n, rng)
        op = gen_matrix(alloc, spec.block_fractions, spec.m, spec.n, rng)
        y = op.matrix @ x + rng.standard_normal(spec.m) * math.sqrt(spec.noise_var)

        _, diag = run_amp(y, op, profile, amp_config_for(spec, record_trajectory=True))

        assert not diag.diverged
        expected = spec.noise_var / (1.0 - aggregate_minimax(theory_profile(spec)) / spec.delta)
        assert diag.gamma_hat[-1] ** 2 == pytest.approx(expected, rel=0.2)

    def test_growth_is_reported_as_divergence(self, rng, monkeypatch):
        op = gen_matrix(AllocationProfile(sigma2_per_block=[1.0]), [1.0], 10, 20, rng)

        def exploding(state, y, op, alphas, onsager):
            gamma = 1.0 if state.iter == 0 else state.gamma_hat * 2.0
            return AmpState(x_t=state.x_t + 1.0, r_t=state.r_t, r_prev=state.r_t, gamma_hat=gamma, iter=state.iter + 1)

        monkeypatch.setattr(amp_engine, "_step", exploding)
        config = AmpConfig(alpha_per_block=[1.0], divergence_window=5, divergence_factor=10.0)
        x_hat, diag = run_amp(np.ones(10), op, single_block(0.1, 0.5), config)
        assert diag.diverged and not diag.converged
        assert diag.iterations == 6
        assert np.all(np.isfinite(x_hat))

    def test_non_finite_iterate_keeps_last_finite(self, rng, monkeypatch):
        op = gen_matrix(AllocationProfile(sigma2_per_block=[1.0]), [1.0], 10, 20, rng)

        def blow_up(state, y, op, alphas, onsager):
            x = state.x_t + 1.0 if state.iter < 3 else np.full_like(state.x_t, np.inf)
            return AmpState(x_t=x, r_t=state.r_t, r_prev=state.r_t, gamma_hat=1.0, iter=state.iter + 1)

        monkeypatch.setattr(amp_engine, "_step", blow_up)
        x_hat, diag = run_amp(np.ones(10), op, single_block(0.1, 0.5), AmpConfig(alpha_per_block=[1.0]))
        assert diag.diverged
        assert diag.iterations == 3
        np.testing.assert_array_equal(x_hat, np.full(20, 3.0))

    def test_rejects_wrong_length(self, rng):
        op = gen_matrix(AllocationProfile(sigma2_per_block=[1.0]), [1.0], 10, 20, rng)
        with pytest.raises(InvalidParameterError):
            run_amp(np.ones(9), op, single_block(0.1, 0.5), AmpConfig(alpha_per_block=[1.0]))
