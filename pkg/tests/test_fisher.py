import math

import numpy as np
import pytest
from scipy.special import gamma

from altsp.config import reference_model
from altsp.distributions import EULER_GAMMA
from altsp.errors import DomainError, SingularFisherError
from altsp.fisher import (
    DesignPoint,
    design_fisher,
    fisher_and_covariance,
    mc_fisher_oracle,
    standardized_moments,
    unit_fisher,
)
from altsp.links import KnotSet, LinkModel, link_arrays


@pytest.fixture
def model():
    return reference_model()


@pytest.fixture
def design():
    return DesignPoint(
        stresses=(0.0, 0.2, 0.45, 0.7, 1.0),
        proportions=(0.2, 0.2, 0.2, 0.2, 0.2),
        n=100.0,
        tau0=3.0,
    )


class TestStandardizedMoments:
    def test_uncensored_limit(self):
        i0, i1, i2 = standardized_moments(50.0)
        assert i0 == pytest.approx(1.0, abs=1e-9)
        assert i1 == pytest.approx(1.0 - EULER_GAMMA, abs=1e-9)
        assert i2 == pytest.approx(math.pi**2 / 6 + (1.0 - EULER_GAMMA) ** 2, abs=1e-8)

    @pytest.mark.parametrize("z0", [-3.0, -1.0, 0.0, 1.5])
    def test_zeroth_moment_is_failure_probability(self, z0):
        i0, _, _ = standardized_moments(z0)
        assert i0 == pytest.approx(1.0 - math.exp(-math.exp(z0)), rel=1e-9)

    def test_no_information_without_time_on_test(self):
        np.testing.assert_array_equal(standardized_moments(-math.inf), np.zeros(3))


class TestUnitFisher:
    def test_matches_monte_carlo(self, model):
        for xi in (0.0, 0.6):
            exact = unit_fisher(xi, model, 2.0)
            mc = mc_fisher_oracle(xi, model, 2.0, reps=200_000, seed=7)
            diff = np.abs(exact - mc.estimate)
            bound = 4.0 * mc.standard_error + 1e-6 * np.abs(exact) + 1e-12
            assert np.all(diff <= bound)

    @pytest.mark.parametrize("instance", range(10))
    def test_random_models_match_monte_carlo(self, instance):
        rng = np.random.default_rng(500 + instance)
        knots = KnotSet((0.0, 0.5, 1.0))
        model = LinkModel(
            knots,
            np.sort(rng.normal(1.0, 1.0, 3))[::-1],
            knots,
            rng.normal(-0.5, 0.3, 3),
        )
        xi = float(rng.uniform())
        mu, sigma = link_arrays([xi], model)
        tau0 = math.exp(mu[0] + sigma[0] * rng.uniform(-2.0, 2.0))

        exact = unit_fisher(xi, model, tau0)
        mc = mc_fisher_oracle(xi, model, tau0, reps=1_000_000, seed=instance)
        bound = 4.0 * mc.standard_error + 1e-6 * np.abs(exact) + 1e-12
        assert np.all(np.abs(exact - mc.estimate) <= bound)

    def test_uncensored_information_is_expected_hessian(self):
        knots = KnotSet((0.0, 1.0))
        model = LinkModel(knots, [2.0, 1.0], knots, [math.log(0.5), math.log(0.8)])
        xi = 0.3
        true_mu, true_sigma = (v[0] for v in link_arrays([xi], model))

        def expected_loglik(theta):
            mu = (1.0 - xi) * theta[0] + xi * theta[1]
            sigma = math.exp((1.0 - xi) * theta[2] + xi * theta[3])
            return (
                -math.log(sigma)
                + (true_mu - true_sigma * EULER_GAMMA - mu) / sigma
                - math.exp((true_mu - mu) / sigma) * gamma(1.0 + true_sigma / sigma)
            )

        h = 1e-4
        theta = model.theta
        hessian = np.empty((4, 4))
        for i in range(4):
            for j in range(4):
                di = np.eye(4)[i] * h
                dj = np.eye(4)[j] * h
                hessian[i, j] = (
                    expected_loglik(theta + di + dj)
                    - expected_loglik(theta + di - dj)
                    - expected_loglik(theta - di + dj)
                    + expected_loglik(theta - di - dj)
                ) / (4.0 * h * h)

        info = unit_fisher(xi, model, math.exp(50.0))
        np.testing.assert_allclose(info, -hessian, rtol=5e-3, atol=1e-8)

    def test_refined_knots_carry_the_same_information(self):
        coarse = LinkModel(
            KnotSet((0.0, 1.0)), [2.0, 1.0], KnotSet((0.0, 1.0)), [-0.7, -0.2]
        )
        fine_knots = KnotSet((0.0, 0.5, 1.0))
        fine = LinkModel(fine_knots, [2.0, 1.5, 1.0], fine_knots, [-0.7, -0.45, -0.2])
        half = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
        refine = np.block([[half, np.zeros((3, 2))], [np.zeros((3, 2)), half]])
        for xi in (0.0, 0.2, 0.5, 0.9):
            np.testing.assert_allclose(
                refine.T @ unit_fisher(xi, fine, 2.5) @ refine,
                unit_fisher(xi, coarse, 2.5),
                rtol=1e-10,
                atol=1e-14,
            )

    def test_diagonal_grows_with_censoring_time(self, model):
        diagonals = [
            np.diag(unit_fisher(0.4, model, tau0))
            for tau0 in (0.05, 0.2, 0.5, 1.0, 3.0, 10.0, 100.0)
        ]
        assert np.all(np.diff(diagonals, axis=0) >= -1e-12)

    def test_oracle_needs_enough_draws(self, model):
        with pytest.raises(DomainError):
            mc_fisher_oracle(0.0, model, 2.0, reps=500, seed=0)

    def test_symmetric_positive_semidefinite(self, model):
        info = unit_fisher(0.3, model, 1.5)
        np.testing.assert_allclose(info, info.T, atol=1e-14)
        assert np.linalg.eigvalsh(info).min() > -1e-12


class TestDesignFisher:
    def test_scales_with_sample_size(self, model, design):
        doubled = DesignPoint(
            design.stresses, design.proportions, 2 * design.n, design.tau0
        )
        np.testing.assert_allclose(
            design_fisher(doubled, model),
            2.0 * design_fisher(design, model),
            rtol=1e-12,
        )

    def test_covariance_inverts_information(self, model, design):
        result = fisher_and_covariance(design, model)
        product = result.blocks.full() @ result.fisher
        np.testing.assert_allclose(product, np.eye(model.n_params), atol=1e-8)
        assert result.condition < 1e12

    def test_single_level_is_singular(self, model):
        design = DesignPoint((0.0, 0.5, 1.0), (1.0, 0.0, 0.0), 50.0, 3.0)
        with pytest.raises(SingularFisherError) as info:
            fisher_and_covariance(design, model)
        assert info.value.directions

    def test_unordered_stresses_rejected(self, model):
        design = DesignPoint((0.0, 0.8, 0.4, 1.0), (0.25,) * 4, 50.0, 3.0)
        with pytest.raises(DomainError):
            fisher_and_covariance(design, model)

    def test_proportions_must_sum_to_one(self, model):
        design = DesignPoint((0.0, 0.5, 1.0), (0.2, 0.2, 0.2), 50.0, 3.0)
        assert design.simplex_residual == pytest.approx(-0.4)
        with pytest.raises(DomainError):
            fisher_and_covariance(design, model)
