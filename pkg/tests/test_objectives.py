import math

import numpy as np
import pytest

from altsp.acceptance import WMoments, acceptability_constant
from altsp.config import PRESETS, reference_model
from altsp.distributions import EULER_GAMMA
from altsp.errors import DomainError
from altsp.objectives import (
    QUANTILE_SECOND_MOMENT,
    CostSpec,
    PlanDecision,
    mc_warranty_cost,
    quantile_point,
    quantile_variance,
    quantile_variance_by_quadrature,
    total_cost,
    warranty_cost,
)


@pytest.fixture
def model():
    return reference_model()


@pytest.fixture
def cost():
    return CostSpec(p_nc=0.094)


def _moments(var_mu0=0.02, var_sigma0=0.004, cov=0.003):
    return WMoments(
        mean=0.0,
        variance=var_mu0 + var_sigma0,
        var_mu0=var_mu0,
        var_sigma0=var_sigma0,
        cov_mu0_sigma0=cov,
        mu0=1.0,
        sigma0=0.6,
    )


class TestWarrantyCost:
    @pytest.mark.parametrize("xi", [0.0, 0.3, 0.7, 1.0])
    def test_matches_monte_carlo(self, model, cost, xi):
        exact = warranty_cost(xi, model, cost)
        mc = mc_warranty_cost(xi, model, cost, draws=200_000, seed=3)
        assert abs(exact - mc.estimate) <= 4.0 * mc.standard_error + 1e-9

    def test_bounded_by_full_rebate(self, model, cost):
        for xi in (0.0, 0.5, 1.0):
            value = warranty_cost(xi, model, cost)
            assert 0.0 <= value <= cost.c_a

    def test_higher_stress_costs_more(self, model, cost):
        # lifetimes shorten as stress rises
        assert warranty_cost(1.0, model, cost) > warranty_cost(0.0, model, cost)


class TestCostSpec:
    def test_defaults(self):
        spec = CostSpec(p_nc=0.05)
        assert (spec.lot_size, spec.c_a, spec.c_r) == (1000, 0.15, 0.80)
        assert (spec.c_t, spec.c_star, spec.w1, spec.w2) == (0.08, 0.05, 0.50, 0.75)

    def test_warranty_limits_ordered(self):
        with pytest.raises(DomainError):
            CostSpec(p_nc=0.05, w1=0.8, w2=0.5)

    def test_from_specification_limit(self, model):
        l_s = math.exp(1.0 + 0.6 * math.log(-math.log(0.9)))
        spec = CostSpec.from_specification_limit(l_s, model, c_a=0.2)
        assert spec.p_nc == pytest.approx(0.1, rel=1e-9)
        assert spec.c_a == 0.2


class TestTotalCost:
    def test_components(self, model, cost):
        plan = PlanDecision((0.0, 0.5, 1.0), (0.2, 0.4, 0.4), 100.0, 2.0)
        k = acceptability_constant(PRESETS["case2"])
        w = _moments()
        value = total_cost(plan, model, cost, k, w)
        rebates = sum(warranty_cost(xi, model, cost) for xi in plan.stresses)
        # the rejection probability lies in [0, 1]
        low = 900 * rebates + 0.08 * 2.0 + 100 * 0.05
        high = 900 * 0.80 + 0.08 * 2.0 + 100 * 0.05
        assert low <= value <= high

    def test_within_sample_bound(self):
        plan = PlanDecision((0.0, 1.0), (0.5, 0.5), 150.0, 1.0)
        assert plan.within_sample_bound(1000)
        assert not plan.within_sample_bound(500)


class TestQuantileVariance:
    def test_constant(self):
        assert QUANTILE_SECOND_MOMENT == pytest.approx(1.978112, abs=1e-6)

    def test_closed_form_matches_quadrature(self):
        rng = np.random.default_rng(33)
        for _ in range(100):
            a = rng.normal(0.0, 0.3, (2, 2))
            cov = a @ a.T
            w = _moments(cov[0, 0], cov[1, 1], cov[0, 1])
            assert quantile_variance(w) == pytest.approx(
                quantile_variance_by_quadrature(w), abs=1e-8
            )

    def test_closed_form(self):
        w = _moments(0.02, 0.004, 0.003)
        expected = 0.02 + 0.004 * QUANTILE_SECOND_MOMENT - 2 * EULER_GAMMA * 0.003
        assert quantile_variance(w) == pytest.approx(expected)

    def test_quantile_point(self, model):
        assert quantile_point(math.exp(-1.0), model) == pytest.approx(1.0)
        with pytest.raises(DomainError):
            quantile_point(1.0, model)
