import dataclasses
import math

import numpy as np
import pytest

from altsp.case_study import (
    CaseStudyConfig,
    CaseStudyReport,
    calibrate_censor_time,
    case_link_specs,
    case_study_params,
    expected_censored_fraction,
    reaction_rate,
    run_case_replications,
)
from altsp.errors import ConfigError, DomainError


@pytest.fixture
def cfg():
    return CaseStudyConfig()


class TestLifeStressRelationship:
    def test_lowest_temperature(self, cfg):
        assert reaction_rate(320.0, cfg) == pytest.approx(0.46439, rel=1e-3)
        params = case_study_params(320.0, cfg)
        assert params.mu_star == pytest.approx(366.07, rel=1e-3)
        assert params.sigma_star == pytest.approx(119.25, rel=1e-3)
        assert params.weibull.shape == pytest.approx(1.0 / params.sigma_star)

    def test_highest_temperature(self, cfg):
        assert case_study_params(415.0, cfg).mu_star == pytest.approx(240.8, rel=2e-3)

    def test_life_falls_with_temperature(self, cfg):
        mus = [case_study_params(s, cfg).mu_star for s in cfg.temps]
        assert all(b < a for a, b in zip(mus, mus[1:]))

    def test_invalid_temperature(self, cfg):
        with pytest.raises(DomainError):
            reaction_rate(0.0, cfg)


class TestConfiguration:
    def test_standardized_stresses(self, cfg):
        np.testing.assert_allclose(
            cfg.standardized_stresses(),
            [0.0, 0.2105, 0.3684, 0.5263, 0.6842, 0.8421, 1.0],
            atol=1e-4,
        )

    def test_knots_from_stress_quantiles(self, cfg):
        pla, linear = case_link_specs(cfg)
        assert pla.mu_knots.cuts == pytest.approx((0.0, 0.3684, 0.6842, 1.0), abs=1e-4)
        assert pla.sigma_knots.cuts == pytest.approx((0.0, 0.5263, 1.0), abs=1e-4)
        assert pla.n_params == 7
        assert linear.n_params == 4

    def test_temperatures_must_increase(self):
        with pytest.raises(ConfigError):
            CaseStudyConfig(temps=(340.0, 320.0))

    def test_positive_counts(self):
        with pytest.raises(ConfigError):
            CaseStudyConfig(reps=0)


class TestCensoring:
    def test_default_censor_time_censors_almost_everything(self, cfg):
        assert expected_censored_fraction(cfg, cfg.censor_time) > 0.9

    def test_calibration_hits_target(self, cfg):
        calibration = calibrate_censor_time(cfg, 0.15)
        assert calibration.fraction == pytest.approx(0.15, abs=1e-8)
        assert calibration.log_censor_time > math.log(cfg.censor_time)
        fraction = expected_censored_fraction(cfg, calibration.censor_time)
        assert fraction == pytest.approx(0.15, abs=1e-6)

    def test_invalid_target(self, cfg):
        with pytest.raises(DomainError):
            calibrate_censor_time(cfg, 1.0)


class TestReplications:
    @pytest.fixture
    def small_cfg(self, cfg):
        calibration = calibrate_censor_time(cfg, 0.3)
        return dataclasses.replace(
            cfg,
            reps=3,
            n_per_level=40,
            censor_time=calibration.censor_time,
            fit_max_evaluations=4000,
            seed=12,
        )

    def test_rows_and_aggregates(self, small_cfg):
        report = run_case_replications(small_cfg)
        assert len(report.rows) == 6
        assert {r.model for r in report.rows} == {"pla", "linear"}

        for label, summary in report.summaries.items():
            kept = [
                r
                for r in report.rows
                if r.model == label and r.converged and math.isfinite(r.aic)
            ]
            assert summary.included == len(kept)
            assert summary.included + summary.excluded == 3
            if kept:
                assert summary.mean_aic == pytest.approx(np.mean([r.aic for r in kept]))
            if len(kept) > 1:
                assert summary.sd_loglik == pytest.approx(
                    np.std([r.loglik for r in kept], ddof=1)
                )

        assert 0 <= report.pla_wins <= report.paired <= 3
        assert report.knots["sigma"] == pytest.approx([0.0, 0.5263, 1.0], abs=1e-4)
        assert report.expected_censored_fraction == pytest.approx(0.3, abs=1e-6)
        assert report.calibration.fraction == pytest.approx(0.15, abs=1e-8)

    def test_deterministic(self, small_cfg):
        first = run_case_replications(small_cfg)
        second = run_case_replications(small_cfg)
        np.testing.assert_array_equal(
            [r.loglik for r in first.rows], [r.loglik for r in second.rows]
        )

    def test_replication_streams_do_not_depend_on_count(self, small_cfg):
        fewer = run_case_replications(dataclasses.replace(small_cfg, reps=1))
        more = run_case_replications(small_cfg)
        assert fewer.rows[0].censored_fraction == more.rows[0].censored_fraction
        np.testing.assert_array_equal(fewer.rows[0].loglik, more.rows[0].loglik)


def _report(pla_wins, paired, mean_delta_aic, extra_parameters=3):
    return CaseStudyReport(
        rows=[],
        summaries={},
        pla_wins=pla_wins,
        paired=paired,
        mean_delta_aic=mean_delta_aic,
        mean_censored_fraction=0.5,
        expected_censored_fraction=0.5,
        extra_parameters=extra_parameters,
    )


class TestModelPreference:
    def test_lower_mean_aic_is_preferred(self):
        assert _report(12, 20, 2.5).preferred_model == "pla"
        assert _report(1, 20, -3.6).preferred_model == "linear"

    @pytest.mark.parametrize(
        "wins,paired,delta,dominant",
        [
            (19, 20, 31.0, True),
            (20, 20, 30.0, False),
            (18, 20, 50.0, False),
            (0, 0, math.nan, False),
        ],
    )
    def test_dominance_needs_wins_and_a_wide_gap(self, wins, paired, delta, dominant):
        assert _report(wins, paired, delta).pla_dominant is dominant

    def test_gap_scales_with_extra_parameters(self):
        assert _report(20, 20, 25.0, extra_parameters=2).pla_dominant
        assert _report(20, 20, 25.0, extra_parameters=3).dominance_gap == 30.0


@pytest.mark.slow
def test_default_censoring_does_not_favor_pla():
    report = run_case_replications(CaseStudyConfig(reps=10))
    assert report.extra_parameters == 3
    assert report.pla_wins <= 3
    assert report.mean_delta_aic < 0
    assert report.preferred_model == "linear"
    assert not report.pla_dominant
