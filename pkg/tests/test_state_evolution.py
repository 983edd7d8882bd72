"""Tests for the state-evolution predictions."""
import math

import numpy as np
import pytest

from app.core.exceptions import InadmissibleRegionError, InvalidParameterError
from app.models.profiles import AllocationProfile, BlockProfile
from app.models.types import AllocMode
from app.services.power_alloc import optimal_allocation, uniform_allocation
from app.services.scalar_risk import minimax_mse
from app.services.state_evolution import (
    aggregate_minimax,
    contour_grid,
    convergence_check,
    evolve_tau,
    phase_transition_rho,
    predicted_mse,
    steady_state_tau,
)
from app.utils.sparsity import block_epsilons, max_admissible_rho


def m_sharp(eps: float) -> float:
    return minimax_mse(eps).m_sharp


class TestAggregate:
    def test_dense_single_block(self):
        assert aggregate_minimax(BlockProfile.from_epsilons([1.0], [1.0], delta=0.5)) == 1.0

    def test_equal_blocks(self):
        profile = BlockProfile.from_epsilons([0.07, 0.07], [0.5, 0.5], delta=0.5)
        assert aggregate_minimax(profile) == pytest.approx(m_sharp(0.07), rel=1e-15)

    def test_weighted_sum(self, two_block_profile):
        expected = 0.5 * m_sharp(0.1) + 0.5 * m_sharp(0.001)
        assert aggregate_minimax(two_block_profile) == pytest.approx(expected, rel=1e-15)


class TestConvergence:
    def test_dense_never_converges(self):
        assert not convergence_check(BlockProfile.from_epsilons([1.0, 1.0], [0.5, 0.5], delta=0.9))

    def test_comfortable_margin(self):
        assert convergence_check(BlockProfile.from_epsilons([0.01], [1.0], delta=0.5))

    def test_flip_matches_transition(self):
        delta = 0.5
        rho_c = phase_transition_rho(delta, 1.0, [1.0])
        rhos = np.linspace(0.01, 1.5, 3000)
        flips = [
            rho for rho in rhos
            if not convergence_check(BlockProfile.from_epsilons([rho * delta], [1.0], delta))
        ]
        assert flips[0] == pytest.approx(rho_c, abs=rhos[1] - rhos[0])


class TestSteadyState:
    def test_noiseless_is_zero(self, two_block_profile):
        assert steady_state_tau(two_block_profile, uniform_allocation(two_block_profile), 0.0) == [0.0, 0.0]

    def test_uniform_allocation_gives_equal_noise(self, two_block_profile):
        t1, t2 = steady_state_tau(two_block_profile, uniform_allocation(two_block_profile), 1.0)
        assert t1 == t2

    def test_power_weighted_noise_is_constant(self, two_block_profile):
        alloc = AllocationProfile(sigma2_per_block=[1.5, 0.5])
        tau2 = steady_state_tau(two_block_profile, alloc, 1.0)
        products = [t * s for t, s in zip(tau2, alloc.sigma2_per_block)]
        assert products[0] == pytest.approx(products[1], rel=1e-14)

    def test_fixed_point_equation(self, two_block_profile):
        alloc = AllocationProfile(sigma2_per_block=[1.5, 0.5])
        noise_var = 0.7
        tau2 = steady_state_tau(two_block_profile, alloc, noise_var)
        feedback = sum(
            c * s * m_sharp(e) * t
            for c, s, e, t in zip(two_block_profile.fractions, alloc.sigma2_per_block, two_block_profile.epsilons, tau2)
        ) / two_block_profile.delta
        for s, t in zip(alloc.sigma2_per_block, tau2):
            assert t == pytest.approx((feedback + noise_var) / s, rel=1e-10)

    def test_divergent_profile(self):
        profile = BlockProfile.from_epsilons([0.4], [1.0], delta=0.3)
        assert steady_state_tau(profile, uniform_allocation(profile), 1.0) is None


class TestPredictedMse:
    def test_uniform_reduction_over_grid(self):
        for eps in np.linspace(0.01, 0.3, 10):
            for delta in np.linspace(0.1, 0.9, 10):
                profile = BlockProfile.from_epsilons([float(eps)], [1.0], float(delta))
                prediction = predicted_mse(profile, uniform_allocation(profile), 0.8)
                m = m_sharp(float(eps))
                if m / delta < 1.0:
                    assert prediction.converges
                    assert prediction.mse == pytest.approx(m * 0.8 / (1.0 - m / delta), rel=1e-12)
                else:
                    assert prediction.is_divergent and not prediction.converges

    def test_noiseless(self, two_block_profile):
        prediction = predicted_mse(two_block_profile, optimal_allocation(two_block_profile), 0.0)
        assert prediction.converges and prediction.mse == 0.0

    def test_linear_in_noise(self, two_block_profile):
        alloc = optimal_allocation(two_block_profile)
        base = predicted_mse(two_block_profile, alloc, 0.3).mse
        for scale in (0.5, 2.0, 10.0):
            assert predicted_mse(two_block_profile, alloc, 0.3 * scale).mse == pytest.approx(scale * base, rel=1e-12)

    def test_ratio_100_closed_forms(self, two_block_profile):
        m1, m2 = m_sharp(0.1), m_sharp(0.001)
        load = (0.5 * m1 + 0.5 * m2) / 0.5
        uniform_expected = (0.5 * m1 + 0.5 * m2) / (1.0 - load)
        optimal_expected = (0.5 * math.sqrt(m1) + 0.5 * math.sqrt(m2)) ** 2 / (1.0 - load)

        uniform = predicted_mse(two_block_profile, uniform_allocation(two_block_profile), 1.0)
        optimal = predicted_mse(two_block_profile, optimal_allocation(two_block_profile), 1.0)
        assert uniform.mse == pytest.approx(uniform_expected, rel=1e-12)
        assert optimal.mse == pytest.approx(optimal_expected, rel=1e-12)
        assert optimal.mse < uniform.mse

    def test_nonincreasing_in_delta(self):
        values = []
        for delta in np.linspace(0.2, 0.95, 20):
            profile = BlockProfile.from_epsilons([0.05, 0.005], [0.5, 0.5], float(delta))
            values.append(predicted_mse(profile, optimal_allocation(profile), 1.0).mse)
        assert np.all(np.diff(values) <= 0.0)

    def test_rejects_negative_noise(self, two_block_profile):
        with pytest.raises(InvalidParameterError):
            predicted_mse(two_block_profile, uniform_allocation(two_block_profile), -1.0)


class TestEvolveTau:
    def test_converges_to_steady_state(self, two_block_profile):
        alloc = optimal_allocation(two_block_profile)
        history = evolve_tau(two_block_profile, alloc, 1.0, gamma2_init=5.0, iterations=300)
        assert len(history) == 301
        assert history[0] == pytest.approx([5.0 / s for s in alloc.sigma2_per_block])
        assert history[-1] == pytest.approx(steady_state_tau(two_block_profile, alloc, 1.0), rel=1e-10)

    def test_grows_above_transition(self):
        profile = BlockProfile.from_epsilons([0.4], [1.0], delta=0.3)
        history = evolve_tau(profile, uniform_allocation(profile), 1.0, gamma2_init=1.0, iterations=50)
        assert history[-1][0] > 50.0
        assert all(b[0] > a[0] for a, b in zip(history, history[1:]))


class TestPhaseTransition:
    @pytest.mark.parametrize("delta", [0.1, 0.3, 0.5, 0.8])
    def test_equal_ratio_is_single_prior_condition(self, delta):
        rho = phase_transition_rho(delta, 1.0, [0.5, 0.5])
        assert rho == pytest.approx(phase_transition_rho(delta, 1.0, [1.0]), rel=1e-9)
        assert abs(m_sharp(rho * delta) - delta) <= 1e-8

    def test_defining_equation(self):
        delta, ratio = 0.5, 100.0
        rho = phase_transition_rho(delta, ratio)
        eps1, eps2 = block_epsilons(rho, delta, ratio, [0.5, 0.5])
        assert eps1 == pytest.approx(100.0 * eps2)
        assert eps2 == pytest.approx(2.0 * rho * delta / 101.0)
        assert abs(0.5 * m_sharp(eps1) + 0.5 * m_sharp(eps2) - delta) <= 1e-8

    def test_grid_scan_oracle(self):
        delta, ratio = 0.5, 100.0
        rho = phase_transition_rho(delta, ratio)
        grid = np.linspace(1e-3, max_admissible_rho(delta, ratio, [0.5, 0.5]) * 0.999, 2000)
        first_divergent = next(
            r for r in grid
            if not convergence_check(BlockProfile.from_epsilons(block_epsilons(r, delta, ratio, [0.5, 0.5]),
                                                                [0.5, 0.5], delta))
        )
        assert first_divergent == pytest.approx(rho, abs=grid[1] - grid[0])

    def test_sparser_ratio_moves_transition_up(self):
        # At fixed rho, concentrating the nonzeros lowers the aggregate minimax MSE.
        assert phase_transition_rho(0.5, 100.0) > phase_transition_rho(0.5, 1.0)

    def test_inadmissible_first(self):
        with pytest.raises(InadmissibleRegionError):
            phase_transition_rho(0.9, 100.0)

    def test_domain(self):
        with pytest.raises(InvalidParameterError):
            phase_transition_rho(1.2, 5.0)


@pytest.fixture(scope="module")
def grids():
    kwargs = dict(rho_range=(0.05, 1.0), delta_range=(0.1, 0.9), sparsity_ratio=100.0,
                  noise_var=1.0, resolution=8)
    return {mode: contour_grid(alloc_mode=mode, **kwargs) for mode in AllocMode}


class TestContourGrid:
    def test_shape(self, grids):
        grid = grids[AllocMode.UNIFORM]
        assert len(grid.cells) == 64
        assert len(grid.phase_transition) == len(grid.inadmissible_boundary) == 8

    def test_optimal_never_worse(self, grids):
        for u, o in zip(grids[AllocMode.UNIFORM].cells, grids[AllocMode.OPTIMAL].cells):
            assert (u.rho, u.delta) == (o.rho, o.delta)
            if u.prediction is not None and u.prediction.converges:
                assert o.prediction.mse <= u.prediction.mse * (1 + 1e-12)

    def test_divergent_cells(self, grids):
        for cell in grids[AllocMode.UNIFORM].cells:
            if cell.inadmissible:
                assert cell.prediction is None and cell.epsilons is None
                assert cell.rho >= max_admissible_rho(cell.delta, 100.0, [0.5, 0.5])
            elif cell.prediction.aggregate_m_sharp / cell.delta >= 1.0:
                assert cell.prediction.is_divergent

    def test_transition_independent_of_allocation(self, grids):
        assert grids[AllocMode.UNIFORM].phase_transition == grids[AllocMode.OPTIMAL].phase_transition

    def test_mse_increases_toward_transition(self, grids):
        grid = grids[AllocMode.OPTIMAL]
        for delta in grid.delta_values:
            row = [
                c.prediction.mse for c in grid.cells
                if c.delta == delta and c.prediction is not None and c.prediction.converges
            ]
            assert np.all(np.diff(row) > 0)

    def test_rejects_bad_delta_range(self):
        with pytest.raises(InvalidParameterError):
            contour_grid((0.1, 0.5), (0.5, 1.0), 10.0, 1.0, AllocMode.UNIFORM, resolution=3)
