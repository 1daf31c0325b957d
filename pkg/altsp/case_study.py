"""
Arrhenius-driven simulation comparing PLA and linear stress links.

Each replication draws Type-I censored Weibull lifetimes at every temperature,
standardizes the temperatures to [0, 1], fits both link kinds by maximum
likelihood and records the log-likelihood and AIC of each.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from tqdm import tqdm

from .distributions import WeibullParams, simulate_censored
from .errors import ConfigError, DomainError, FitConvergenceError, InputError
from .inference import LinkSpec, fit_mle
from .links import default_knots
from .optimizer import OptimizerSettings

logger = logging.getLogger(__name__)

DEFAULT_TEMPS = (320.0, 340.0, 355.0, 370.0, 385.0, 400.0, 415.0)
DOMINANCE_SHARE = 0.95
DOMINANCE_GAP = 10.0


@dataclass(frozen=True)
class CaseStudyConfig:
    temps: Tuple[float, ...] = DEFAULT_TEMPS
    volt: float = 170.0
    gamma0: float = 1e-4
    gamma1: float = 1.0
    gamma2: float = 2.0
    gamma3: float = 1000.0
    delta0: float = 1.0
    activation_energy: float = 10000.0
    gas_constant: float = 8.314
    k2: float = 0.1
    z: float = 1.2
    n_per_level: int = 100
    censor_time: float = 350.0
    reps: int = 100
    seed: int = 0
    target_censored_fraction: float = 0.15
    fit_restarts: int = 1
    fit_max_evaluations: int = 20_000
    mu_segments: int = 3
    sigma_segments: int = 2

    def __post_init__(self):
        temps = tuple(float(t) for t in self.temps)
        object.__setattr__(self, "temps", temps)
        if len(temps) < 2 or any(b <= a for a, b in zip(temps, temps[1:])):
            raise ConfigError(f"temps must increase strictly, got {temps}")
        if temps[0] <= 0:
            raise ConfigError("temps must be positive (Kelvin)")
        for name in (
            "volt",
            "gamma0",
            "gamma1",
            "gamma2",
            "gamma3",
            "delta0",
            "activation_energy",
            "gas_constant",
            "k2",
            "z",
            "censor_time",
        ):
            if not getattr(self, name) > 0:
                raise ConfigError(f"case_study.{name} must be positive")
        if self.n_per_level < 1 or self.reps < 1:
            raise ConfigError("n_per_level and reps must be at least 1")
        if not (0.0 < self.target_censored_fraction < 1.0):
            raise ConfigError("target_censored_fraction must lie in (0, 1)")
        if self.fit_restarts < 1 or self.fit_max_evaluations < 1:
            raise ConfigError("fit_restarts and fit_max_evaluations must be positive")

    def standardized_stresses(self) -> np.ndarray:
        temps = np.asarray(self.temps)
        return (temps - temps[0]) / (temps[-1] - temps[0])


class CaseStudyParams(NamedTuple):
    mu_star: float
    sigma_star: float
    weibull: WeibullParams


class ReplicationRow(NamedTuple):
    rep: int
    model: str
    loglik: float
    aic: float
    censored_fraction: float
    converged: bool


class ModelSummary(NamedTuple):
    model: str
    mean_loglik: float
    sd_loglik: float
    mean_aic: float
    sd_aic: float
    included: int
    excluded: int


class CensorCalibration(NamedTuple):
    log_censor_time: float
    censor_time: float
    fraction: float


@dataclass
class CaseStudyReport:
    rows: List[ReplicationRow]
    summaries: Dict[str, ModelSummary]
    pla_wins: int
    paired: int
    mean_delta_aic: float
    mean_censored_fraction: float
    expected_censored_fraction: float
    calibration: Optional[CensorCalibration] = None
    knots: Dict[str, List[float]] = field(default_factory=dict)
    extra_parameters: int = 3

    @property
    def preferred_model(self) -> str:
        """Link with the lower mean AIC over the paired replications."""
        return "pla" if self.mean_delta_aic > 0 else "linear"

    @property
    def dominance_gap(self) -> float:
        return DOMINANCE_GAP * self.extra_parameters

    @property
    def pla_dominant(self) -> bool:
        """
        PLA wins at least 95% of paired replications and the mean AIC gap
        exceeds ten times the number of extra PLA parameters.
        """
        if not self.paired:
            return False
        return (
            self.pla_wins >= DOMINANCE_SHARE * self.paired
            and self.mean_delta_aic > self.dominance_gap
        )


# ---------------------------------------------------------------------- #
# Life-stress relationship
# ---------------------------------------------------------------------- #
def reaction_rate(s: float, cfg: CaseStudyConfig) -> float:
    if not s > 0:
        raise DomainError(f"temperature must be positive, got {s!r}")
    ln_v = math.log(cfg.volt)
    exponent = (
        -cfg.activation_energy / (cfg.gas_constant * s)
        + cfg.gamma2 * ln_v
        + cfg.gamma3 * ln_v / (cfg.gas_constant * s)
    )
    return cfg.gamma0 * math.exp(exponent)


def case_study_params(s: float, cfg: CaseStudyConfig) -> CaseStudyParams:
    """True ``(mu*, sigma*)`` at temperature ``s`` and the matching Weibull."""
    mu_star = (cfg.volt / cfg.delta0) ** cfg.gamma1 / reaction_rate(s, cfg)
    sigma_star = cfg.k2 * mu_star**cfg.z
    weibull = WeibullParams(shape=1.0 / sigma_star, scale=math.exp(-mu_star))
    return CaseStudyParams(mu_star, sigma_star, weibull)


def expected_censored_fraction(cfg: CaseStudyConfig, tau0: float) -> float:
    """Expected share of units surviving ``tau0``, pooled over equal groups."""
    if not tau0 > 0:
        raise DomainError(f"censor time must be positive, got {tau0!r}")
    return _fraction_at(cfg, math.log(tau0))


def _fraction_at(cfg: CaseStudyConfig, ln_tau: float) -> float:
    survivors = []
    for s in cfg.temps:
        p = case_study_params(s, cfg)
        z0 = (ln_tau - p.mu_star) / p.sigma_star
        survivors.append(math.exp(-math.exp(min(z0, 700.0))))
    return float(np.mean(survivors))


def calibrate_censor_time(
    cfg: CaseStudyConfig, target_fraction: float
) -> CensorCalibration:
    """Censoring time whose expected censored fraction equals ``target_fraction``."""
    if not (0.0 < target_fraction < 1.0):
        raise DomainError(f"target fraction must lie in (0, 1), got {target_fraction}")
    params = [case_study_params(s, cfg) for s in cfg.temps]
    widest = max(p.sigma_star for p in params)
    lo = min(p.mu_star for p in params) - 50.0 * widest
    hi = max(p.mu_star for p in params) + 5.0 * widest
    ln_tau = brentq(
        lambda t: _fraction_at(cfg, t) - target_fraction, lo, hi, xtol=1e-12
    )
    censor_time = math.exp(ln_tau) if ln_tau < 709.0 else math.inf
    return CensorCalibration(ln_tau, censor_time, _fraction_at(cfg, ln_tau))


# ---------------------------------------------------------------------- #
# Replications
# ---------------------------------------------------------------------- #
def case_link_specs(cfg: CaseStudyConfig) -> Tuple[LinkSpec, LinkSpec]:
    xis = cfg.standardized_stresses()
    m = len(xis) - 1
    pla = LinkSpec.pla(
        default_knots(m, cfg.mu_segments, xis),
        default_knots(m, cfg.sigma_segments, xis),
    )
    return pla, LinkSpec.linear()


def _summarize(model: str, rows: List[ReplicationRow]) -> ModelSummary:
    kept = [r for r in rows if r.converged and math.isfinite(r.aic)]
    logliks = np.array([r.loglik for r in kept])
    aics = np.array([r.aic for r in kept])

    def sd(values):
        return float(values.std(ddof=1)) if values.size > 1 else math.nan

    return ModelSummary(
        model=model,
        mean_loglik=float(logliks.mean()) if kept else math.nan,
        sd_loglik=sd(logliks),
        mean_aic=float(aics.mean()) if kept else math.nan,
        sd_aic=sd(aics),
        included=len(kept),
        excluded=len(rows) - len(kept),
    )


def run_case_replications(
    cfg: CaseStudyConfig, progress: bool = False
) -> CaseStudyReport:
    """
    Simulate ``cfg.reps`` samples and fit both links to each.

    Replication ``r`` draws from the ``r``-th child of ``SeedSequence(seed)``,
    so results do not depend on how many replications run.  Fits that fail are
    kept as rows with ``converged=False`` and left out of the aggregates.
    """
    xis = cfg.standardized_stresses()
    levels = [case_study_params(s, cfg).weibull for s in cfg.temps]
    pla, linear = case_link_specs(cfg)
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.reps)

    rows: List[ReplicationRow] = []
    for rep, stream in enumerate(tqdm(streams, disable=not progress, unit="rep")):
        sample = simulate_censored(
            [(xi, p, cfg.n_per_level) for xi, p in zip(xis, levels)],
            cfg.censor_time,
            stream,
        )
        settings = OptimizerSettings(
            seed=rep,
            restarts=cfg.fit_restarts,
            max_evaluations=cfg.fit_max_evaluations,
            screening_points=0,
        )
        for spec in (pla, linear):
            try:
                fit = fit_mle(sample, spec, settings)
                row = ReplicationRow(
                    rep,
                    spec.label,
                    fit.loglik,
                    fit.aic,
                    sample.censored_fraction,
                    fit.converged,
                )
            except (FitConvergenceError, InputError) as e:
                logger.warning("replication %d, %s fit failed: %s", rep, spec.label, e)
                row = ReplicationRow(
                    rep, spec.label, math.nan, math.nan, sample.censored_fraction, False
                )
            rows.append(row)

    by_model = {
        label: [r for r in rows if r.model == label]
        for label in (pla.label, linear.label)
    }
    summaries = {label: _summarize(label, rs) for label, rs in by_model.items()}

    deltas = []
    for p_row, l_row in zip(by_model[pla.label], by_model[linear.label]):
        usable = p_row.converged and l_row.converged
        if usable and math.isfinite(p_row.aic) and math.isfinite(l_row.aic):
            deltas.append(l_row.aic - p_row.aic)
    deltas = np.array(deltas)

    calibration = None
    try:
        calibration = calibrate_censor_time(cfg, cfg.target_censored_fraction)
    except ValueError as e:
        logger.warning("censor time calibration failed: %s", e)

    report = CaseStudyReport(
        rows=rows,
        summaries=summaries,
        pla_wins=int(np.sum(deltas > 0)),
        paired=int(deltas.size),
        mean_delta_aic=float(deltas.mean()) if deltas.size else math.nan,
        mean_censored_fraction=float(
            np.mean([r.censored_fraction for r in by_model[pla.label]])
        ),
        expected_censored_fraction=expected_censored_fraction(cfg, cfg.censor_time),
        calibration=calibration,
        knots={
            "mu": list(pla.mu_knots.cuts),
            "sigma": list(pla.sigma_knots.cuts),
        },
        extra_parameters=pla.n_params - linear.n_params,
    )
    logger.info(
        "pla beat linear in %d of %d paired replications; %s preferred by mean AIC",
        report.pla_wins,
        report.paired,
        report.preferred_model,
    )
    return report
