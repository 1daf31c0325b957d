import numpy as np
import pytest
from scipy.optimize import least_squares

from altsp.errors import ConfigError
from altsp.link_benchmark import (
    MODEL_ORDER,
    PLA_KNOTS,
    _reciprocal_fit,
    pla_sse,
    sse_benchmark,
    sse_of,
    true_relationship,
)
from altsp.links import KnotSet, hat_basis


@pytest.fixture(scope="module")
def report():
    return sse_benchmark()


def test_every_model_reported(report):
    assert [row.model for row in report.rows] == list(MODEL_ORDER)
    assert report.grid_points == 1001
    assert all(row.sse >= 0 for row in report.rows)


def test_ordering_of_link_shapes(report):
    sse = report.as_dict()
    # the target is odd about 0.5, so the extra middle knot of pla3 adds nothing
    assert sse["pla3"] <= sse["pla1"] * (1.0 + 1e-9)
    assert sse["pla1"] < sse["cubic"] < sse["linear"]
    assert sse["pla2"] < sse["linear"]
    assert sse["inverse"] > sse["linear"]
    assert sse["combination"] > sse["linear"]
    assert report.ranking()[0] in ("pla1", "pla3")


def test_reciprocal_forms_never_lose_to_a_constant(report):
    xi = np.linspace(0.0, 1.0, report.grid_points)
    y = true_relationship(xi)
    total = float(((y - y.mean()) ** 2).sum())
    assert report.sse("inverse") <= total
    assert report.sse("combination") <= total * 1.001


def test_reciprocal_fit_recovers_an_exact_reciprocal():
    xs = np.linspace(0.0, 1.0, 101)
    sse, coef = _reciprocal_fit(xs, 1.0 / (2.0 + 3.0 * xs))
    assert sse == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(coef, [2.0, 3.0], rtol=1e-6)


def test_reciprocal_fit_with_pole_between_grid_points():
    xs = np.linspace(0.0, 1.0, 101)
    # pole at 0.505 sits between two grid points
    sse, coef = _reciprocal_fit(xs, 1.0 / (-5.05 + 10.0 * xs))
    assert sse == pytest.approx(0.0, abs=1e-10)
    assert -coef[0] / coef[1] == pytest.approx(0.505, rel=1e-6)


def test_linear_sse_magnitude(report):
    assert report.sse("linear") == pytest.approx(12.2316, rel=0.25)


def test_linear_sse_below_total_sum_of_squares(report):
    xi = np.linspace(0.0, 1.0, report.grid_points)
    y = true_relationship(xi)
    total = float(((y - y.mean()) ** 2).sum())
    assert report.sse("linear") < total


def test_pla_sse_is_least_squares_residual():
    xs = np.linspace(0.0, 1.0, 201)
    ys = true_relationship(xs)
    knots = KnotSet(PLA_KNOTS["pla1"])
    sse, coef = pla_sse(xs, ys, knots)

    basis = hat_basis(xs, knots)
    generic = least_squares(
        lambda g: basis @ g - ys,
        np.zeros(len(knots)),
        xtol=1e-12,
        ftol=1e-12,
        gtol=1e-12,
    )
    assert sse == pytest.approx(float(generic.fun @ generic.fun), rel=1e-7)
    assert sse == pytest.approx(sse_of(lambda x: hat_basis(x, knots) @ coef, xs))


def test_pla_through_every_grid_point_is_exact():
    xs = np.linspace(0.0, 1.0, 21)
    ys = np.sin(7.0 * xs)
    sse, _ = pla_sse(xs, ys, KnotSet(tuple(xs)))
    assert sse == pytest.approx(0.0, abs=1e-20)


def test_relationship_is_odd_about_midpoint():
    xi = np.array([0.1, 0.3, 0.45])
    np.testing.assert_allclose(true_relationship(xi), -true_relationship(1.0 - xi))


def test_small_grid_rejected():
    with pytest.raises(ConfigError):
        sse_benchmark(grid_points=10)


def test_unknown_model(report):
    with pytest.raises(KeyError):
        report.sse("quartic")
