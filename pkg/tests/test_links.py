import math

import numpy as np
import pytest

from altsp.errors import ConfigError, DomainError
from altsp.links import (
    KnotSet,
    LinkModel,
    default_knots,
    equispaced_knots,
    eval_link,
    hat_basis,
    hat_gradients,
    link_arrays,
)


@pytest.fixture
def three_segment_model():
    knots = KnotSet((0.0, 0.3, 0.7, 1.0))
    return LinkModel(
        knots,
        [2.0, 1.0, 1.5, -0.5],
        KnotSet((0.0, 1.0)),
        [math.log(0.5), math.log(0.3)],
    )


class TestKnotSet:
    def test_segments(self):
        knots = KnotSet((0, 0.5, 1))
        assert knots.segments == 2
        assert len(knots) == 3

    @pytest.mark.parametrize(
        "cuts",
        [
            (0.0,),
            (0.1, 1.0),
            (0.0, 0.9),
            (0.0, 0.5, 0.5, 1.0),
            (0.0, 0.6, 0.4, 1.0),
        ],
    )
    def test_invalid_knots(self, cuts):
        with pytest.raises(ConfigError):
            KnotSet(cuts)


class TestHatBasis:
    def test_rows_form_partition_of_unity(self):
        knots = KnotSet((0.0, 0.25, 0.6, 1.0))
        xs = np.linspace(0.0, 1.0, 41)
        basis = hat_basis(xs, knots)
        assert basis.shape == (41, 4)
        np.testing.assert_allclose(basis.sum(axis=1), 1.0, atol=1e-14)
        assert np.all(basis >= 0)

    def test_interpolates_knot_values(self, three_segment_model):
        model = three_segment_model
        for cut, value in zip(model.mu_knots.cuts, model.mu_gamma):
            mu, _ = link_arrays([cut], model)
            assert mu[0] == pytest.approx(value, abs=1e-14)

    def test_linear_between_knots(self, three_segment_model):
        mu, _ = link_arrays([0.5], three_segment_model)
        # halfway between 0.3 (1.0) and 0.7 (1.5)
        assert mu[0] == pytest.approx(1.25)

    def test_continuity_at_interior_knots(self, three_segment_model):
        eps = 1e-9
        for cut in (0.3, 0.7):
            left, _ = link_arrays([cut - eps], three_segment_model)
            right, _ = link_arrays([cut + eps], three_segment_model)
            assert left[0] == pytest.approx(right[0], abs=1e-7)

    def test_sigma_is_log_linear(self, three_segment_model):
        _, sigma = link_arrays([0.0, 0.5, 1.0], three_segment_model)
        np.testing.assert_allclose(
            sigma, [0.5, math.sqrt(0.5 * 0.3), 0.3], rtol=1e-12
        )

    @pytest.mark.parametrize(
        "xi,expected",
        [(0.25, (0.5, 0.5, 0.0)), (0.5, (0.0, 1.0, 0.0)), (0.75, (0.0, 0.5, 0.5))],
    )
    def test_gradients(self, xi, expected):
        gradients = hat_gradients(xi, KnotSet((0.0, 0.5, 1.0)))
        np.testing.assert_allclose(gradients, expected, atol=1e-14)

    def test_location_is_linear_in_coefficients(self, three_segment_model):
        model = three_segment_model
        for xi in (0.1, 0.45, 0.9):
            basis = hat_gradients(xi, model.mu_knots)
            assert eval_link(xi, model).location == pytest.approx(
                float(basis @ model.mu_gamma)
            )

    def test_stress_out_of_range(self, three_segment_model):
        with pytest.raises(DomainError):
            eval_link(1.2, three_segment_model)


class TestLinkModel:
    def test_theta_round_trip(self, three_segment_model):
        model = three_segment_model
        theta = model.theta
        assert theta.size == model.n_params == 6
        assert model.with_theta(theta) == model
        assert model.parameter_names()[0] == "gamma_mu[0]"
        assert model.parameter_names()[-1] == "gamma_sigma[1]"

    def test_coefficient_count_checked(self):
        with pytest.raises(ConfigError):
            LinkModel(KnotSet((0.0, 1.0)), [1.0], KnotSet((0.0, 1.0)), [0.0, 0.0])

    def test_eval_link_returns_ev_parameters(self, three_segment_model):
        params = eval_link(0.0, three_segment_model)
        assert params.location == pytest.approx(2.0)
        assert params.scale == pytest.approx(0.5)


class TestDefaultKnots:
    def test_without_data(self):
        assert default_knots(4, 3).cuts == pytest.approx((0.0, 0.2, 0.4, 1.0))

    def test_from_stress_quantiles(self):
        levels = [0.0, 0.2105, 0.3684, 0.5263, 0.6842, 0.8421, 1.0]
        knots = default_knots(6, 3, levels)
        assert knots.cuts == pytest.approx((0.0, 0.3684, 0.6842, 1.0), abs=1e-4)
        sigma_knots = default_knots(6, 2, levels)
        assert sigma_knots.cuts == pytest.approx((0.0, 0.5263, 1.0), abs=1e-4)

    def test_too_many_segments(self):
        with pytest.raises(ConfigError):
            default_knots(2, 4)

    def test_equispaced(self):
        assert equispaced_knots(4).cuts == pytest.approx((0.0, 0.25, 0.5, 0.75, 1.0))
